#pragma once

#include "isac/metrics.hpp"

#include <cstdint>

namespace isac {

enum class Hypothesis { h0, h1 };

/// One simulated sensing block: transmitted frame, received echo, and the
/// ground truth behind it.
struct EchoBatch {
    CMatrix y;  // N_r x L echo
    CMatrix x;  // N_t x L transmitted signal (known at the receiver)
    Hypothesis hypothesis = Hypothesis::h0;
    Complex alpha = 0.0;
    double theta_rad = 0.0;
};

/// Draws one block: X = W S with K unit-power QPSK rows and N_t unit-power
/// complex Gaussian sensing rows, Y = alpha b(theta) a(theta)^H X + Z with
/// Z i.i.d. CN(0, sigma_s^2).
EchoBatch simulate_echo(const Beamformer& bf, Complex alpha, double theta_rad, int block_len,
                        const SceneConfig& cfg, std::mt19937_64& rng);

/// Matched-filter statistic Re{y^H V(theta) x} evaluated by per-column
/// contraction (the L N_r x L N_t operator is never materialized).
double matched_filter_statistic(const EchoBatch& batch, double theta_probe_rad,
                                const SceneConfig& cfg);

/// GLRT statistic max_theta |y^H V(theta) x|^2 / ||V(theta) x||^2 over a
/// finite grid; grid nodes with no transmit energy are skipped with a warning
/// on stderr.
double glrt_statistic(const EchoBatch& batch, const std::vector<double>& theta_grid_rad,
                      const SceneConfig& cfg);

/// CFAR threshold for the matched filter at a probe angle:
/// Gamma = sigma_s sqrt(L N_r a^H R_X a) erfc^-1(2 pf).
double threshold_for_pf(const Beamformer& bf, double theta_probe_rad, double pf, int block_len,
                        const SceneConfig& cfg);

/// Deterministic multi-trial detection rate of the matched filter against the
/// CFAR threshold. alpha == 0 measures the false-alarm rate; a complex alpha
/// is detected with a known-phase reference (the statistic is derotated by
/// arg(alpha), which leaves the null distribution untouched). Results are
/// reproducible from (seed, trials) for any job count.
double empirical_detection_rate(const Beamformer& bf, Complex alpha, double theta_rad,
                                int block_len, double pf, long trials, std::uint64_t seed,
                                const SceneConfig& cfg, int jobs = 1);

struct MonteCarloOptions {
    int bins = 50;
    int crosscheck_cells = 0;   // prior draws validated at signal level
    int crosscheck_reps = 400;  // detection trials per validated cell
    double crosscheck_pf = 1e-2;
    int block_len = 64;
};

struct CrossCheckCell {
    double alpha_abs = 0.0;
    double theta_rad = 0.0;
    double analytic_pd = 0.0;   // Eq.-8 value at the cell, block length included
    double empirical_pd = 0.0;  // signal-level detection rate
    double ci_halfwidth = 0.0;  // ~95% normal-approximation interval
};

struct MonteCarloResult {
    std::vector<double> bin_edges;  // bins + 1 edges on [0,1]
    std::vector<long> counts;       // analytic P_d histogram
    double mean_pd = 0.0;
    std::vector<CrossCheckCell> cells;
};

/// Draws (|alpha|, theta) from the continuous priors, accumulates the analytic
/// detection probability histogram, and cross-checks a configurable subset of
/// cells against the signal-level detector.
MonteCarloResult monte_carlo_pd(const Beamformer& bf, const SceneConfig& cfg, long trials,
                                std::uint64_t seed, const MonteCarloOptions& opts = {});

/// Deterministic stream split for worker seeds.
std::uint64_t split_seed(std::uint64_t root, std::uint64_t index);

}  // namespace isac
