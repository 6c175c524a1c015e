#include "isac/matrix_io.hpp"

#include <fstream>
#include <stdexcept>

namespace isac {

void write_cmatrix(std::ostream& os, const CMatrix& m) {
    os.precision(17);
    os << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << " ";
            os << m(i, j).real() << " " << m(i, j).imag();
        }
        os << "\n";
    }
}

CMatrix read_cmatrix(std::istream& is) {
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows < 0 || cols < 0)
        throw std::runtime_error("read_cmatrix: bad dimension header");
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double re = 0.0, im = 0.0;
            if (!(is >> re >> im)) throw std::runtime_error("read_cmatrix: truncated data");
            m(i, j) = Complex(re, im);
        }
    return m;
}

void write_beamformer(std::ostream& os, const Beamformer& bf) {
    os << "isacbf-beamformer v1\n";
    os << bf.n_tx() << " " << bf.n_users() << "\n";
    write_cmatrix(os, bf.w_comm);
    write_cmatrix(os, bf.w_sense);
}

Beamformer read_beamformer(std::istream& is) {
    std::string magic, version;
    if (!(is >> magic >> version) || magic != "isacbf-beamformer" || version != "v1")
        throw std::runtime_error("read_beamformer: bad magic");
    int n = 0, k = 0;
    if (!(is >> n >> k)) throw std::runtime_error("read_beamformer: bad header");
    Beamformer bf;
    bf.w_comm = read_cmatrix(is);
    bf.w_sense = read_cmatrix(is);
    if (bf.w_comm.rows() != n || bf.w_comm.cols() != k || bf.w_sense.rows() != n ||
        bf.w_sense.cols() != n)
        throw std::runtime_error("read_beamformer: dimension mismatch");
    return bf;
}

void save_beamformer(const std::string& path, const Beamformer& bf) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_beamformer: cannot open " + path);
    write_beamformer(os, bf);
}

Beamformer load_beamformer(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_beamformer: cannot open " + path);
    return read_beamformer(is);
}

}  // namespace isac
