#include "isac/optimizer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace isac {

namespace {

// Prior mixture of the sensing response, F_bar = sum_m w_m F(theta_m).
CMatrix mixture_f(const DiscretizedPrior& prior_theta, const SceneConfig& cfg) {
    CMatrix f = CMatrix::Zero(cfg.n_tx, cfg.n_tx);
    for (int m = 0; m < prior_theta.size(); ++m)
        f += prior_theta.weights[m] * target_f_matrix(prior_theta.nodes[m], cfg);
    return 0.5 * (f + f.adjoint()).eval();
}

Subproblem constraint_shell(const SceneConfig& cfg, const std::vector<ChannelRow>& channels) {
    Subproblem sp;
    sp.n_tx = cfg.n_tx;
    sp.gamma_lin = cfg.sinr_threshold_lin();
    sp.sigma_c2 = cfg.comm_noise_w();
    sp.power_budget = cfg.total_power_w();
    for (const ChannelRow& h : channels) sp.q_matrices.push_back(h.adjoint() * h);
    return sp;
}

Beamformer solve_and_recover(const Subproblem& sp, const std::vector<ChannelRow>& channels,
                             double eig_floor, const char* what) {
    const SubproblemSolution sol = solve(sp);
    if (sol.status == SolveStatus::infeasible)
        throw InfeasibleError(std::string(what) + ": SINR constraints unsatisfiable "
                              "under the power budget");
    if (sol.status != SolveStatus::optimal)
        throw std::runtime_error(std::string(what) + ": conic solve failed");
    const Rank1Extraction ext = extract_rank1(sol, sp.q_matrices);
    return recover_beamformers(ext.r_tilde, ext.w_tilde, channels, eig_floor);
}

// Unitary alignment of the sensing block toward a reference (orthogonal
// Procrustes). The covariance and all SINR values are invariant; the blend
// direction gets as short as the unitary freedom of the factorization allows.
void align_sensing_block(Beamformer& bf, const CMatrix& reference) {
    if (bf.w_sense.size() == 0) return;
    const CMatrix b = bf.w_sense.adjoint() * reference;
    Eigen::JacobiSVD<CMatrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    bf.w_sense = bf.w_sense * (svd.matrixU() * svd.matrixV().adjoint());
}

double frob_norm(const CMatrix& m) { return m.norm(); }

}  // namespace

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::max_iterations: return "max_iterations";
        case RunStatus::stalled: return "stalled";
        case RunStatus::infeasible: return "infeasible";
        case RunStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

const char* to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::max_sinr_0deg: return "max_sinr_0deg";
        case BaselineKind::max_esinr: return "max_esinr";
        case BaselineKind::omni: return "omni";
    }
    return "unknown";
}

Rank1Extraction extract_rank1(const SubproblemSolution& sol,
                              const std::vector<CMatrix>& q_matrices) {
    if (sol.status != SolveStatus::optimal)
        throw std::invalid_argument("extract_rank1: solution is not optimal");
    return extract_rank1(sol.r_x_bar.r_x, sol.w_bars, q_matrices);
}

Rank1Extraction extract_rank1(const CMatrix& r_x, const std::vector<CMatrix>& w,
                              const std::vector<CMatrix>& q_matrices) {
    if (w.size() != q_matrices.size())
        throw std::invalid_argument("extract_rank1: W/Q count mismatch");
    Rank1Extraction ext;
    ext.r_tilde = r_x;
    ext.w_tilde.reserve(q_matrices.size());
    for (std::size_t k = 0; k < q_matrices.size(); ++k) {
        const CMatrix& w_bar = w[k];
        const CMatrix& q = q_matrices[k];
        const double c = (q * w_bar).trace().real();
        if (c <= 1e-14)
            throw DegenerateUserError("extract_rank1: user " + std::to_string(k) +
                                      " receives no power");
        ext.w_tilde.push_back((w_bar * q * w_bar.adjoint()) / c);
    }
    return ext;
}

Beamformer recover_beamformers(const CMatrix& r_tilde, const std::vector<CMatrix>& w_tilde,
                               const std::vector<ChannelRow>& channels, double eig_floor) {
    const int n = static_cast<int>(r_tilde.rows());
    const int k_count = static_cast<int>(w_tilde.size());
    if (static_cast<int>(channels.size()) != k_count)
        throw std::invalid_argument("recover_beamformers: channel count mismatch");

    Beamformer bf;
    bf.w_comm = CMatrix::Zero(n, k_count);
    CMatrix residual = r_tilde;
    for (int k = 0; k < k_count; ++k) {
        const CVector h = channels[k].adjoint();
        const CVector wh = w_tilde[k] * h;
        const double gain = (h.adjoint() * w_tilde[k] * h).value().real();
        if (gain <= 0.0)
            throw DegenerateUserError("recover_beamformers: zero beamforming gain for user " +
                                      std::to_string(k));
        bf.w_comm.col(k) = wh / std::sqrt(gain);
        residual -= w_tilde[k];
    }
    residual = 0.5 * (residual + residual.adjoint()).eval();

    Eigen::LLT<CMatrix> llt(residual);
    if (llt.info() == Eigen::Success) {
        bf.w_sense = llt.matrixL();
        return bf;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(residual);
    const double scale = std::max(1e-300, std::abs(r_tilde.trace().real()));
    if (eig.eigenvalues().minCoeff() < -1e-6 * scale)
        throw std::runtime_error("recover_beamformers: order constraint violated upstream");
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(eig_floor);
    bf.w_sense = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                 eig.eigenvectors().adjoint();
    return bf;
}

Beamformer initialize(const SceneConfig& cfg, const std::vector<ChannelRow>& channels,
                      const DiscretizedPrior& prior_theta, const DiscretizedPrior& /*unused*/) {
    Subproblem sp = constraint_shell(cfg, channels);
    sp.objective_matrix = mixture_f(prior_theta, cfg);
    return solve_and_recover(sp, channels, cfg.optimizer.jitter, "initialize");
}

std::pair<Beamformer, OptimizationTrace> sca_sdr(const SceneConfig& cfg,
                                                 const std::vector<ChannelRow>& channels,
                                                 const DiscretizedPrior& prior_theta,
                                                 const DiscretizedPrior& prior_alpha,
                                                 const OptimizerSettings& settings,
                                                 const IterationObserver& observer,
                                                 const Beamformer* warm_start) {
    settings.validate();
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    };

    OptimizationTrace trace;
    Beamformer w =
        warm_start ? *warm_start : initialize(cfg, channels, prior_theta, prior_alpha);
    const int k_count = static_cast<int>(channels.size());

    // The iterate is the SDR pair (R_X, W_1..W_K). Blending this pair keeps
    // every constraint (the set is convex) and makes the surrogate chord an
    // exact first-order ascent direction of EP_d, which the beamformer blend
    // of the raw algorithm does not guarantee; the beamformer is re-recovered
    // from the blended pair after every accepted step.
    CMatrix r_cur = w.covariance().r_x;
    std::vector<CMatrix> w_cur(k_count);
    for (int k = 0; k < k_count; ++k)
        w_cur[k] = w.w_comm.col(k) * w.w_comm.col(k).adjoint();

    double epd = expected_pd(Covariance{r_cur}, prior_theta, prior_alpha, cfg);
    constexpr double kMinStep = 9.31322574615478515625e-10;  // 2^-30
    constexpr double kMomentum = 0.85;
    CMatrix r_prev = r_cur;
    // Endgame: when the surrogate gap certifies that no first-order progress
    // is left, momentum goes off and the prox term stiffens geometrically,
    // which contracts the displacement until the stopping rule can fire.
    double prox_boost = 1.0;
    bool settle = false;

    trace.status = RunStatus::max_iterations;
    for (int iter = 1; iter <= settings.max_iters; ++iter) {
        const Covariance r_t{r_cur};
        const Subproblem sp = assemble(r_t, prior_theta, prior_alpha, channels, cfg);

        // Proximal surrogate max <G, R> - rho/2 ||R - center||^2 over the
        // shared constraints, solved by conditional gradient: each inner pass
        // solves the linear subproblem at the shifted gradient and takes the
        // exact quadratic line-search step. The prox point coincides with the
        // anchor exactly at stationarity, which is what drives the residual
        // to zero; a pure first-order surrogate keeps bouncing between far
        // vertices of the feasible set. The center carries heavy-ball
        // momentum, with a plain-prox retry when that misleads.
        const double g_norm = sp.objective_matrix.norm();
        const double rho = settings.prox_weight * prox_boost * g_norm /
                           std::max(1e-300, sp.power_budget);

        SubproblemSolution sol;
        CMatrix r_hat;
        std::vector<CMatrix> w_hat;
        bool first_solve_failed = false;
        double dirderiv = 0.0;

        auto run_inner = [&](const CMatrix& center) {
            r_hat = r_cur;
            w_hat = w_cur;
            first_solve_failed = false;
            constexpr int kMaxInner = 10;
            for (int j = 0; j < kMaxInner; ++j) {
                Subproblem spj = sp;
                if (rho > 0.0)
                    spj.objective_matrix = sp.objective_matrix - rho * (r_hat - center);
                SubproblemSolution sj =
                    solve(spj, SolveOptions{.skip_feasibility_phase = true});
                if (sj.status != SolveStatus::optimal) {
                    // A failed refinement pass is dropped; the pair gathered
                    // so far is already feasible.
                    if (j == 0) {
                        sol = sj;
                        first_solve_failed = true;
                    }
                    break;
                }
                sol = sj;
                const CMatrix d = sol.r_x_bar.r_x - r_hat;
                const double chord = (spj.objective_matrix.adjoint() * d).trace().real();
                const double dn2 = d.squaredNorm();
                if (chord <= 1e-9 * (1.0 + g_norm * sp.power_budget) || dn2 <= 0.0) break;
                const double s = (rho > 0.0) ? std::min(1.0, chord / (rho * dn2)) : 1.0;
                r_hat += s * d;
                r_hat = 0.5 * (r_hat + r_hat.adjoint()).eval();
                for (int k = 0; k < k_count; ++k)
                    w_hat[k] += s * (sol.w_bars[k] - w_hat[k]).eval();
                if (rho == 0.0) break;  // plain linear surrogate: single solve
                if (s * std::sqrt(dn2) < 1e-9 * sp.power_budget) break;
            }
            dirderiv =
                (sp.objective_matrix.adjoint() * (r_hat - r_cur)).trace().real();
        };

        const bool with_momentum = settings.prox_weight > 0.0 && iter > 1 && !settle;
        run_inner(with_momentum ? (r_cur + kMomentum * (r_cur - r_prev)).eval() : r_cur);
        // Momentum can mislead (non-ascent direction) or push the shifted
        // subproblem into numerical trouble; plain prox guarantees ascent.
        if (with_momentum && (first_solve_failed || dirderiv <= 0.0)) run_inner(r_cur);

        if (first_solve_failed) {
            trace.status = (sol.status == SolveStatus::infeasible) ? RunStatus::infeasible
                                                                   : RunStatus::numerical_failure;
            trace.records.push_back({iter, epd, 0.0, 0.0, 0.0, sol.status, elapsed()});
            break;
        }
        sol.status = SolveStatus::optimal;
        // Report the subproblem solution as the prox point with the linear
        // surrogate value of Eq.-17 form.
        sol.r_x_bar = Covariance{r_hat};
        sol.w_bars = w_hat;
        sol.objective_value =
            (sp.objective_matrix.adjoint() * r_hat).trace().real() + sp.constant_term;

        const Rank1Extraction ext = extract_rank1(sol, sp.q_matrices);
        Beamformer w_dag =
            recover_beamformers(ext.r_tilde, ext.w_tilde, channels, settings.jitter);
        if (observer) observer({iter, sp, sol, ext.r_tilde, ext.w_tilde, w_dag});
        align_sensing_block(w_dag, w.w_sense);
        const double dist = frob_norm(w_dag.joint() - w.joint());
        if (std::getenv("ISAC_SCA_DEBUG"))
            std::fprintf(stderr,
                         "sca it=%d |dR|=%.3e |dWc|=%.3e |dWs|=%.3e wb_drift=%.3e\n", iter,
                         (r_hat - r_cur).norm(), (w_dag.w_comm - w.w_comm).norm(),
                         (w_dag.w_sense - w.w_sense).norm(),
                         k_count ? (w_hat[0] - w_cur[0]).norm() : 0.0);

        const CMatrix d_r = r_hat - r_cur;

        double step = 1.0;
        double epd_next = epd;
        bool accepted = false;
        const double ascent = std::max(dirderiv, 0.0);
        while (step >= kMinStep) {
            const Covariance cand{r_cur + step * d_r};
            const double epd_cand = expected_pd(cand, prior_theta, prior_alpha, cfg);
            if (epd_cand >= epd + settings.armijo_c1 * step * ascent &&
                epd_cand >= epd - 1e-12) {
                epd_next = epd_cand;
                accepted = true;
                break;
            }
            step *= settings.armijo_beta;
        }

        if (!accepted) {
            trace.records.push_back(
                {iter, epd, sol.objective_value, 0.0, 0.0, sol.status, elapsed()});
            trace.status = RunStatus::stalled;
            break;
        }

        const CMatrix r_old = r_cur;
        r_cur += step * d_r;
        r_cur = 0.5 * (r_cur + r_cur.adjoint()).eval();
        // Momentum from the accepted displacement; restart after backtracks.
        r_prev = (step >= 1.0) ? r_old : r_cur;
        for (int k = 0; k < k_count; ++k)
            w_cur[k] += step * (sol.w_bars[k] - w_cur[k]).eval();
        const Rank1Extraction cur_ext = extract_rank1(r_cur, w_cur, sp.q_matrices);
        Beamformer w_next =
            recover_beamformers(cur_ext.r_tilde, cur_ext.w_tilde, channels, settings.jitter);
        align_sensing_block(w_next, w.w_sense);
        w = std::move(w_next);

        epd = epd_next;
        const double residual = step * dist;
        trace.records.push_back(
            {iter, epd, sol.objective_value, step, residual, sol.status, elapsed()});
        if (residual < settings.tol) {
            trace.status = RunStatus::converged;
            break;
        }
        if (settings.prox_weight > 0.0) {
            if (!settle && dirderiv <= 1e-5 && residual < 100.0 * settings.tol)
                settle = true;
            if (settle) prox_boost = std::min(prox_boost * 1.5, 1e5);
        }
    }

    trace.final_epd = epd;
    return {w, trace};
}

Beamformer baseline(BaselineKind kind, const SceneConfig& cfg,
                    const std::vector<ChannelRow>& channels,
                    const DiscretizedPrior& prior_theta, const DiscretizedPrior&) {
    Subproblem sp = constraint_shell(cfg, channels);
    sp.objective_matrix = CMatrix::Zero(cfg.n_tx, cfg.n_tx);
    switch (kind) {
        case BaselineKind::max_sinr_0deg:
            sp.objective_matrix = target_f_matrix(0.0, cfg);
            break;
        case BaselineKind::max_esinr:
            sp.objective_matrix = mixture_f(prior_theta, cfg);
            break;
        case BaselineKind::omni: {
            if (cfg.n_users() == 0) {
                // diag(R_X) = P/N with nothing else to trade off: the isotropic
                // covariance, realized by a scaled identity sensing block.
                Beamformer bf;
                bf.w_comm = CMatrix::Zero(cfg.n_tx, 0);
                bf.w_sense = std::sqrt(cfg.total_power_w() / cfg.n_tx) *
                             CMatrix::Identity(cfg.n_tx, cfg.n_tx);
                return bf;
            }
            sp.equal_power_diag = true;
            sp.maximize_min_slack = true;
            break;
        }
    }
    return solve_and_recover(sp, channels, cfg.optimizer.jitter, to_string(kind));
}

BeamformerCheck verify_beamformer(const Beamformer& bf, const std::vector<ChannelRow>& channels,
                                  const SceneConfig& cfg) {
    BeamformerCheck c;
    c.power_w = bf.power();
    c.power_ok = c.power_w <= cfg.total_power_w() + 1e-6;
    c.min_sinr_margin = std::numeric_limits<double>::infinity();
    const double gamma = cfg.sinr_threshold_lin();
    for (int k = 0; k < static_cast<int>(channels.size()); ++k)
        c.min_sinr_margin =
            std::min(c.min_sinr_margin, sinr(k, bf, channels, cfg) / gamma - 1.0);
    if (channels.empty()) c.min_sinr_margin = 0.0;
    c.sinr_ok = c.min_sinr_margin >= -1e-6;
    return c;
}

}  // namespace isac
