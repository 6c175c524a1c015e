// Acceptance suite: one line per criterion, every tolerance pinned in code.
// Runs the reference scenario (16x16 array, 20 dBm, -94 dBm noise, 2.4 GHz,
// two users at +/-45 deg and 200 m, kappa=4, Pf=1e-6) end to end.

#include "isac/conic.hpp"
#include "isac/detector.hpp"
#include "isac/optimizer.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace isac;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d. %s (%s)\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    va_list args;
    va_start(args, format);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// --- criterion 1: analytic gradient vs central finite differences ----------

void criterion_gradient() {
    const auto t0 = std::chrono::steady_clock::now();
    SceneConfig cfg;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> trace_frac(0.01, 1.0);
    std::uniform_real_distribution<double> angle(-0.5, 0.5);
    // Scattering magnitudes placed across the detection transition, where the
    // gradient is resolvable by finite differences (deep in saturation the
    // analytic gradient underflows and central differences return rounding
    // noise, so a relative comparison carries no information there).
    std::uniform_real_distribution<double> root_snr(0.3, 5.5);

    double max_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double trace = trace_frac(rng) * cfg.total_power_w();
        const Covariance r{oracle::random_psd(cfg.n_tx, trace, rng)};
        const double theta = angle(rng);
        const CVector a = steering_tx(theta, cfg.n_tx);
        const double tr_fr = cfg.n_rx * (a.adjoint() * r.r_x * a).value().real();
        const double alpha = root_snr(rng) * std::sqrt(cfg.sense_noise_w() / tr_fr);
        const CMatrix g = pd_gradient(alpha, theta, r, cfg);
        if (g.norm() == 0.0) {
            max_rel = 1.0;  // transition-regime gradient must not vanish
            continue;
        }
        const CMatrix fd = oracle::fd_pd_gradient(alpha, theta, r, cfg, 1e-6 * trace);
        max_rel = std::max(max_rel, (g - fd).norm() / g.norm());
    }
    const double dt = seconds_since(t0);
    report(1, "pd_gradient matches finite differences over 100 covariances",
           max_rel <= 1e-5 && dt < 10.0, fmt("max rel err %.2e, %.1f s", max_rel, dt));
}

// --- criterion 2: matched-filter Monte Carlo vs the closed form ------------

void criterion_detector_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    SceneConfig cfg;
    cfg.n_tx = cfg.n_rx = 8;
    cfg.users.clear();
    cfg.total_power_dbm = watts_to_dbm(8.0);
    cfg.sense_noise_dbm = 30.0;  // 1 W
    cfg.comm_noise_dbm = 30.0;
    cfg.false_alarm = 1e-2;
    const int block = 64;

    Beamformer bf;
    bf.w_comm = CMatrix::Zero(cfg.n_tx, 0);
    bf.w_sense = CMatrix::Identity(cfg.n_tx, cfg.n_tx);  // R_X = I, feasible

    const double theta = 0.3;
    const CVector a = steering_tx(theta, cfg.n_tx);
    const Covariance r = bf.covariance();
    const double tr_fr = cfg.n_rx * (a.adjoint() * r.r_x * a).value().real();
    // alpha placed for P_d ~= 0.7 with the explicit block length
    const double alpha =
        (erfc_inv(2.0 * cfg.false_alarm) + 0.37) / std::sqrt(block * tr_fr);

    const Covariance scaled{static_cast<double>(block) * r.r_x};
    const double analytic = detection_probability(alpha, theta, scaled, cfg);
    const double empirical = empirical_detection_rate(bf, Complex(alpha, 0.0), theta, block,
                                                      cfg.false_alarm, 100000, 77, cfg);
    const double pfa = empirical_detection_rate(bf, 0.0, theta, block, cfg.false_alarm,
                                                1000000, 78, cfg);
    const double dt = seconds_since(t0);
    const bool pass = std::fabs(empirical - analytic) <= 0.02 &&
                      std::fabs(pfa - cfg.false_alarm) / cfg.false_alarm <= 0.20 && dt < 300.0;
    report(2, "matched-filter rates match the closed form", pass,
           fmt("Pd analytic %.4f vs empirical %.4f; Pfa %.5f vs 0.01; %.0f s", analytic,
               empirical, pfa, dt));
}

// --- criteria 3-5: reference optimization run -------------------------------

struct ReferenceRun {
    Beamformer w_star;
    OptimizationTrace trace;
    std::vector<ChannelRow> channels;
    DiscretizedPrior th, al;
    SceneConfig cfg;
    bool rank1_ok = true;
    std::string rank1_detail = "all iterations clean";
    bool intermediate_ok = true;
    std::string intermediate_detail;
    double runtime_s = 0.0;
};

ReferenceRun run_reference() {
    ReferenceRun run;
    run.cfg = SceneConfig{};
    std::mt19937_64 rng(run.cfg.rng_seed);
    run.channels = gen_channels(run.cfg, rng);
    run.th = theta_prior(run.cfg);
    run.al = alpha_prior(run.cfg);

    auto observer = [&](const IterationDetail& d) {
        // Rank-1 reduction identities on every iteration.
        const double scale = d.r_tilde.trace().real();
        for (std::size_t k = 0; k < d.w_tilde.size(); ++k) {
            Eigen::SelfAdjointEigenSolver<CMatrix> eig(d.w_tilde[k], Eigen::EigenvaluesOnly);
            const auto& ev = eig.eigenvalues();
            if (ev(ev.size() - 2) > 1e-8 * ev(ev.size() - 1)) {
                run.rank1_ok = false;
                run.rank1_detail = fmt("it %d: W~_%zu eigenvalue ratio %.1e", d.iter, k,
                                       ev(ev.size() - 2) / ev(ev.size() - 1));
            }
            const CMatrix& q = d.subproblem.q_matrices[k];
            const double before = (q * d.solution.w_bars[k]).trace().real();
            const double after = (q * d.w_tilde[k]).trace().real();
            if (std::fabs(after - before) > 1e-9 * std::fabs(before)) {
                run.rank1_ok = false;
                run.rank1_detail =
                    fmt("it %d: tr(Q W~) drifted by %.1e rel", d.iter,
                        std::fabs(after - before) / std::fabs(before));
            }
        }
        CMatrix residual = d.r_tilde;
        for (const auto& w : d.w_tilde) residual -= w;
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(residual, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-7 * scale) {
            run.rank1_ok = false;
            run.rank1_detail =
                fmt("it %d: order residual eigenvalue %.1e", d.iter,
                    eig.eigenvalues().minCoeff());
        }
        const CMatrix ww = d.w_dag.joint() * d.w_dag.joint().adjoint();
        if ((ww - d.r_tilde).norm() > 1e-6 * d.r_tilde.norm()) {
            run.rank1_ok = false;
            run.rank1_detail = fmt("it %d: ||W W^H - R~|| = %.1e rel", d.iter,
                                   (ww - d.r_tilde).norm() / d.r_tilde.norm());
        }
        // Every intermediate recovered beamformer must already be feasible.
        const BeamformerCheck vc = verify_beamformer(d.w_dag, run.channels, run.cfg);
        if (!vc.ok()) {
            run.intermediate_ok = false;
            run.intermediate_detail =
                fmt("it %d: margin %.1e power %.8f", d.iter, vc.min_sinr_margin, vc.power_w);
        }
    };

    const auto t0 = std::chrono::steady_clock::now();
    auto [w_star, trace] =
        sca_sdr(run.cfg, run.channels, run.th, run.al, run.cfg.optimizer, observer);
    run.runtime_s = seconds_since(t0);
    run.w_star = w_star;
    run.trace = trace;
    return run;
}

void criterion_convergence(const ReferenceRun& run) {
    bool monotone = true;
    double prev = 0.0;
    for (const auto& rec : run.trace.records) {
        if (rec.epd < prev - 1e-9) monotone = false;
        prev = rec.epd;
    }
    const bool converged = run.trace.status == RunStatus::converged &&
                           !run.trace.records.empty() &&
                           run.trace.records.back().residual < 1e-4 &&
                           static_cast<int>(run.trace.records.size()) <= 50;
    const bool pass = monotone && converged && run.runtime_s < 600.0;
    report(3, "SCA run converges monotonically on the reference scenario", pass,
           fmt("status %s, %zu iters, final EP_d %.6f, residual %.2e, %.0f s",
               to_string(run.trace.status), run.trace.records.size(), run.trace.final_epd,
               run.trace.records.empty() ? 0.0 : run.trace.records.back().residual,
               run.runtime_s));
}

void criterion_rank1_identities(const ReferenceRun& run) {
    report(4, "rank-1 extraction identities hold on every iteration", run.rank1_ok,
           run.rank1_detail);
}

void criterion_constraints(const ReferenceRun& run) {
    bool ok = true;
    std::ostringstream detail;
    const auto check_one = [&](const char* name, const Beamformer& bf) {
        const BeamformerCheck c = verify_beamformer(bf, run.channels, run.cfg);
        if (!c.ok()) ok = false;
        detail << name << " margin " << fmt("%.1e", c.min_sinr_margin) << " power "
               << fmt("%.6f", c.power_w) << "; ";
    };
    check_one("proposed", run.w_star);
    for (auto kind : {BaselineKind::max_sinr_0deg, BaselineKind::max_esinr, BaselineKind::omni})
        check_one(to_string(kind),
                  baseline(kind, run.cfg, run.channels, run.th, run.al));
    if (!run.intermediate_ok) {
        ok = false;
        detail << "intermediate iterate failed: " << run.intermediate_detail;
    } else {
        detail << "all intermediates feasible";
    }
    report(5, "beamformers (intermediate and final) satisfy SINR and power", ok, detail.str());
}

// --- criterion 6: scheme ordering over the SINR threshold ------------------

void criterion_ordering() {
    bool ok = true;
    std::ostringstream detail;
    for (double gamma_db : {16.0, 20.0, 24.0}) {
        SceneConfig cfg;
        cfg.sinr_threshold_db = gamma_db;
        std::mt19937_64 rng(cfg.rng_seed);
        const auto channels = gen_channels(cfg, rng);
        const auto th = theta_prior(cfg);
        const auto al = alpha_prior(cfg);
        auto [w_star, trace] = sca_sdr(cfg, channels, th, al, cfg.optimizer);
        detail << fmt("g=%g: prop %.4f vs", gamma_db, trace.final_epd);
        for (auto kind :
             {BaselineKind::max_sinr_0deg, BaselineKind::max_esinr, BaselineKind::omni}) {
            const Beamformer bf = baseline(kind, cfg, channels, th, al);
            const double epd = expected_pd(bf.covariance(), th, al, cfg);
            detail << fmt(" %.4f", epd);
            if (trace.final_epd < epd - 1e-3) ok = false;
        }
        detail << "; ";
    }
    report(6, "proposed scheme dominates every baseline over the threshold sweep", ok,
           detail.str());
}

// --- criterion 7: EP_d nondecreasing in transmit power ---------------------

void criterion_power_monotone() {
    bool ok = true;
    double prev = -1.0;
    std::ostringstream detail;
    for (double p_dbm : {8.0, 11.0, 14.0, 17.0, 20.0}) {
        SceneConfig cfg;
        cfg.total_power_dbm = p_dbm;
        cfg.sinr_threshold_db = 16.0;
        std::mt19937_64 rng(cfg.rng_seed);
        const auto channels = gen_channels(cfg, rng);
        const auto th = theta_prior(cfg);
        const auto al = alpha_prior(cfg);
        auto [w_star, trace] = sca_sdr(cfg, channels, th, al, cfg.optimizer);
        detail << fmt("%.0f dBm: %.4f; ", p_dbm, trace.final_epd);
        if (trace.final_epd < prev - 1e-3) ok = false;
        prev = trace.final_epd;
    }
    report(7, "proposed EP_d nondecreasing in transmit power", ok, detail.str());
}

// --- criterion 8: quadrature grid convergence -------------------------------

void criterion_quadrature(const ReferenceRun& run) {
    const Covariance r = run.w_star.covariance();
    const double coarse = expected_pd(r, run.th, run.al, run.cfg);
    SceneConfig fine_cfg = run.cfg;
    fine_cfg.target.grid_m *= 2;
    fine_cfg.target.grid_n *= 2;
    const double fine =
        expected_pd(r, theta_prior(fine_cfg), alpha_prior(fine_cfg), fine_cfg);
    const double delta = std::fabs(fine - coarse);
    report(8, "doubling both prior grids moves EP_d by less than 1e-3", delta < 1e-3,
           fmt("|%.8f - %.8f| = %.2e", fine, coarse, delta));
}

// --- criterion 9: exact anchors ---------------------------------------------

void criterion_anchors() {
    SceneConfig cfg;
    const Covariance zero{CMatrix::Zero(cfg.n_tx, cfg.n_tx)};
    const double epd0 = expected_pd(zero, theta_prior(cfg), alpha_prior(cfg), cfg);
    std::mt19937_64 rng(5);
    const Covariance r{oracle::random_psd(cfg.n_tx, cfg.total_power_w(), rng)};
    const double pd0 = detection_probability(0.0, 0.2, r, cfg);

    SceneConfig solo = cfg;
    solo.users.clear();
    const Beamformer omni =
        baseline(BaselineKind::omni, solo, {}, theta_prior(solo), alpha_prior(solo));
    std::vector<double> grid;
    for (double d = -90.0; d <= 90.0; d += 0.5) grid.push_back(deg_to_rad(d));
    const auto pattern = beampattern(omni.covariance(), grid, solo);
    double lo = pattern[0], hi = pattern[0];
    for (double v : pattern) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const bool pass = epd0 == cfg.false_alarm && pd0 == cfg.false_alarm &&
                      hi / lo <= 1.0 + 1e-6;
    report(9, "exact anchors: EP_d and P_d at zero SNR, flat omni pattern", pass,
           fmt("EP_d(0)=%.2e Pd(0)=%.2e flatness %.12f", epd0, pd0, hi / lo));
}

// --- criterion 10: Monte-Carlo histogram ------------------------------------

void criterion_histogram() {
    SceneConfig cfg;
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    const auto th = theta_prior(cfg);
    const auto al = alpha_prior(cfg);

    auto [w_star, trace] = sca_sdr(cfg, channels, th, al, cfg.optimizer);
    const Beamformer base = baseline(BaselineKind::max_sinr_0deg, cfg, channels, th, al);

    const MonteCarloResult rep_a = monte_carlo_pd(w_star, cfg, 1000, cfg.rng_seed);
    const MonteCarloResult rep_b = monte_carlo_pd(w_star, cfg, 1000, cfg.rng_seed);
    const MonteCarloResult bl = monte_carlo_pd(base, cfg, 1000, cfg.rng_seed);

    // Bitwise reproducibility of the histogram from the seed.
    std::ostringstream csv1, csv2;
    for (std::size_t b = 0; b < rep_a.counts.size(); ++b) {
        csv1 << rep_a.bin_edges[b] << "," << rep_a.bin_edges[b + 1] << "," << rep_a.counts[b]
             << "\n";
        csv2 << rep_b.bin_edges[b] << "," << rep_b.bin_edges[b + 1] << "," << rep_b.counts[b]
             << "\n";
    }
    const bool pass = rep_a.mean_pd > bl.mean_pd && csv1.str() == csv2.str() &&
                      rep_a.mean_pd == rep_b.mean_pd;
    report(10, "Monte-Carlo histogram: proposed right of the broadside baseline", pass,
           fmt("mean Pd %.4f vs %.4f, reproducible=%d", rep_a.mean_pd, bl.mean_pd,
               csv1.str() == csv2.str()));
}

}  // namespace

int main() {
    std::printf("acceptance suite: reference scenario, seed %llu\n",
                (unsigned long long)SceneConfig{}.rng_seed);
    criterion_gradient();
    criterion_detector_oracle();
    const ReferenceRun run = run_reference();
    criterion_convergence(run);
    criterion_rank1_identities(run);
    criterion_constraints(run);
    criterion_ordering();
    criterion_power_monotone();
    criterion_quadrature(run);
    criterion_anchors();
    criterion_histogram();
    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
