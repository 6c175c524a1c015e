#include "isac/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace isac {

namespace {

constexpr double kQpskLevel = M_SQRT1_2;

// Joint data matrix S: K QPSK rows on top, N_t Gaussian sensing rows below.
CMatrix draw_symbols(int k_users, int n_tx, int block_len, std::mt19937_64& rng) {
    CMatrix s(k_users + n_tx, block_len);
    std::uniform_int_distribution<int> qpsk(0, 3);
    std::normal_distribution<double> gauss(0.0, M_SQRT1_2);
    for (int l = 0; l < block_len; ++l)
        for (int r = 0; r < k_users; ++r) {
            const int q = qpsk(rng);
            s(r, l) = Complex((q & 1) ? kQpskLevel : -kQpskLevel,
                              (q & 2) ? kQpskLevel : -kQpskLevel);
        }
    for (int l = 0; l < block_len; ++l)
        for (int r = 0; r < n_tx; ++r)
            s(k_users + r, l) = Complex(gauss(rng), gauss(rng));
    return s;
}

}  // namespace

std::uint64_t split_seed(std::uint64_t root, std::uint64_t index) {
    // splitmix64 over the (root, index) pair.
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

EchoBatch simulate_echo(const Beamformer& bf, Complex alpha, double theta_rad, int block_len,
                        const SceneConfig& cfg, std::mt19937_64& rng) {
    if (block_len < 1) throw std::invalid_argument("simulate_echo: block_len >= 1 required");
    EchoBatch batch;
    batch.alpha = alpha;
    batch.theta_rad = theta_rad;
    batch.hypothesis = (alpha == Complex(0.0)) ? Hypothesis::h0 : Hypothesis::h1;

    const CMatrix s = draw_symbols(bf.n_users(), cfg.n_tx, block_len, rng);
    batch.x = bf.joint() * s;

    const CVector a = steering_tx(theta_rad, cfg.n_tx);
    const CVector b = steering_rx(theta_rad, cfg.n_rx);
    const double noise_std = std::sqrt(cfg.sense_noise_w() / 2.0);
    std::normal_distribution<double> gauss(0.0, noise_std);

    batch.y = CMatrix(cfg.n_rx, block_len);
    const Eigen::RowVectorXcd ax = a.adjoint() * batch.x;  // 1 x L
    for (int l = 0; l < block_len; ++l)
        for (int r = 0; r < cfg.n_rx; ++r)
            batch.y(r, l) = alpha * b(r) * ax(l) + Complex(gauss(rng), gauss(rng));
    return batch;
}

double matched_filter_statistic(const EchoBatch& batch, double theta_probe_rad,
                                const SceneConfig& cfg) {
    if (batch.y.cols() != batch.x.cols())
        throw std::invalid_argument("matched_filter_statistic: mismatched block lengths");
    const CVector a = steering_tx(theta_probe_rad, cfg.n_tx);
    const CVector b = steering_rx(theta_probe_rad, cfg.n_rx);
    const Eigen::RowVectorXcd u = b.adjoint() * batch.y;  // u_l = b^H y_l
    const Eigen::RowVectorXcd v = a.adjoint() * batch.x;  // v_l = a^H x_l
    // y^H V x = sum_l (y_l^H b)(a^H x_l) = sum_l conj(u_l) v_l
    double acc = 0.0;
    for (Eigen::Index l = 0; l < u.cols(); ++l) acc += (std::conj(u(l)) * v(l)).real();
    return acc;
}

double glrt_statistic(const EchoBatch& batch, const std::vector<double>& theta_grid_rad,
                      const SceneConfig& cfg) {
    if (theta_grid_rad.empty()) throw std::invalid_argument("glrt_statistic: empty angle grid");
    double best = 0.0;
    bool any = false;
    for (double th : theta_grid_rad) {
        const CVector a = steering_tx(th, cfg.n_tx);
        const CVector b = steering_rx(th, cfg.n_rx);
        const Eigen::RowVectorXcd v = a.adjoint() * batch.x;
        const double vx_energy = cfg.n_rx * v.squaredNorm();  // ||V(theta) x||^2
        if (vx_energy <= 1e-20) {
            std::cerr << "glrt_statistic: no transmit energy toward " << rad_to_deg(th)
                      << " deg, node skipped\n";
            continue;
        }
        const Eigen::RowVectorXcd u = b.adjoint() * batch.y;
        Complex corr = 0.0;
        for (Eigen::Index l = 0; l < u.cols(); ++l) corr += std::conj(u(l)) * v(l);
        const double stat = std::norm(corr) / vx_energy;
        if (!any || stat > best) best = stat;
        any = true;
    }
    if (!any) throw std::invalid_argument("glrt_statistic: all grid nodes skipped");
    return best;
}

double threshold_for_pf(const Beamformer& bf, double theta_probe_rad, double pf, int block_len,
                        const SceneConfig& cfg) {
    if (!(pf > 0.0 && pf < 1.0))
        throw std::domain_error("threshold_for_pf: pf must lie in (0,1)");
    const CVector a = steering_tx(theta_probe_rad, cfg.n_tx);
    const Covariance r = bf.covariance();
    const double beam_power = (a.adjoint() * r.r_x * a).value().real();
    const double vx_energy = block_len * cfg.n_rx * beam_power;  // E ||V x||^2
    return std::sqrt(cfg.sense_noise_w() * vx_energy) * erfc_inv(2.0 * pf);
}

double empirical_detection_rate(const Beamformer& bf, Complex alpha, double theta_rad,
                                int block_len, double pf, long trials, std::uint64_t seed,
                                const SceneConfig& cfg, int jobs) {
    if (trials < 1) throw std::invalid_argument("empirical_detection_rate: trials >= 1");
    const double gamma = threshold_for_pf(bf, theta_rad, pf, block_len, cfg);
    const double phase = std::arg(alpha);
    const Complex derotate = std::polar(1.0, -phase);

    constexpr long kChunk = 4096;
    const long n_chunks = (trials + kChunk - 1) / kChunk;
    std::atomic<long> next{0};
    std::atomic<long> hits{0};

    auto worker = [&] {
        long local = 0;
        for (;;) {
            const long c = next.fetch_add(1);
            if (c >= n_chunks) break;
            std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(c)));
            const long begin = c * kChunk;
            const long end = std::min(trials, begin + kChunk);
            for (long t = begin; t < end; ++t) {
                EchoBatch batch = simulate_echo(bf, alpha, theta_rad, block_len, cfg, rng);
                if (phase != 0.0) batch.y *= derotate;
                if (matched_filter_statistic(batch, theta_rad, cfg) > gamma) ++local;
            }
        }
        hits += local;
    };

    const int n_threads = std::max(1, jobs);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return static_cast<double>(hits.load()) / static_cast<double>(trials);
}

MonteCarloResult monte_carlo_pd(const Beamformer& bf, const SceneConfig& cfg, long trials,
                                std::uint64_t seed, const MonteCarloOptions& opts) {
    if (trials < 1) throw std::invalid_argument("monte_carlo_pd: trials >= 1 required");
    if (opts.bins < 1) throw std::invalid_argument("monte_carlo_pd: bins >= 1 required");
    MonteCarloResult res;
    res.bin_edges.resize(opts.bins + 1);
    for (int i = 0; i <= opts.bins; ++i)
        res.bin_edges[i] = static_cast<double>(i) / opts.bins;
    res.counts.assign(opts.bins, 0);

    const Covariance r = bf.covariance();
    const double sigma_alpha = cfg.alpha_scale();
    const double theta_mean = deg_to_rad(cfg.target.theta_mean_deg);
    const double theta_std = deg_to_rad(cfg.target.theta_std_deg);

    std::mt19937_64 rng(split_seed(seed, 0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SceneConfig cell_cfg = cfg;  // analytic cross-check at the validation pf
    cell_cfg.false_alarm = opts.crosscheck_pf;

    double sum_pd = 0.0;
    for (long t = 0; t < trials; ++t) {
        const double u = unif(rng);
        const double alpha_abs = sigma_alpha * std::sqrt(-2.0 * std::log1p(-u));
        const double theta = theta_mean + theta_std * gauss(rng);
        const double phase = 2.0 * M_PI * unif(rng);

        const double pd = detection_probability(alpha_abs, theta, r, cfg);
        sum_pd += pd;
        int bin = static_cast<int>(pd * opts.bins);
        bin = std::clamp(bin, 0, opts.bins - 1);
        ++res.counts[bin];

        if (static_cast<long>(res.cells.size()) < opts.crosscheck_cells) {
            CrossCheckCell cell;
            cell.alpha_abs = alpha_abs;
            cell.theta_rad = theta;
            // Analytic value with the explicit block length; the metrics-side
            // convention absorbs L, the simulation carries it.
            const Covariance scaled{static_cast<double>(opts.block_len) * r.r_x};
            cell.analytic_pd = detection_probability(alpha_abs, theta, scaled, cell_cfg);
            const Complex alpha_cplx = alpha_abs * std::polar(1.0, phase);
            cell.empirical_pd = empirical_detection_rate(
                bf, alpha_cplx, theta, opts.block_len, opts.crosscheck_pf,
                opts.crosscheck_reps, split_seed(seed, 1000003 + t), cfg, 1);
            cell.ci_halfwidth =
                1.96 * std::sqrt(std::max(1e-12, cell.empirical_pd * (1.0 - cell.empirical_pd) /
                                                      opts.crosscheck_reps));
            res.cells.push_back(cell);
        }
    }
    res.mean_pd = sum_pd / static_cast<double>(trials);
    return res;
}

}  // namespace isac
