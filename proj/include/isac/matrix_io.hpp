#pragma once

#include "isac/metrics.hpp"

#include <iosfwd>
#include <string>

namespace isac {

/// Text format for complex matrices: a "rows cols" header line followed by
/// row-major "re im" pairs, full double precision.
void write_cmatrix(std::ostream& os, const CMatrix& m);
CMatrix read_cmatrix(std::istream& is);

/// Beamformer file: magic line, N_t and K, then W_c and W_s as cmatrix blocks.
void write_beamformer(std::ostream& os, const Beamformer& bf);
Beamformer read_beamformer(std::istream& is);

void save_beamformer(const std::string& path, const Beamformer& bf);
Beamformer load_beamformer(const std::string& path);

}  // namespace isac
