#pragma once

#include "isac/conic.hpp"

#include <functional>

namespace isac {

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateUserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RunStatus { converged, max_iterations, stalled, infeasible, numerical_failure };
const char* to_string(RunStatus s);

struct IterationRecord {
    int iter = 0;
    double epd = 0.0;        // EP_d of the accepted iterate
    double surrogate = 0.0;  // surrogate optimum of the subproblem
    double step = 0.0;       // Armijo step
    double residual = 0.0;   // step * ||W_dag - W||_F
    SolveStatus solver_status = SolveStatus::numerical_failure;
    double elapsed_s = 0.0;
};

struct OptimizationTrace {
    std::vector<IterationRecord> records;
    RunStatus status = RunStatus::numerical_failure;
    double final_epd = 0.0;
};

/// Per-iteration internals, exposed for invariant checks in the test suite.
struct IterationDetail {
    int iter;
    const Subproblem& subproblem;
    const SubproblemSolution& solution;
    const CMatrix& r_tilde;
    const std::vector<CMatrix>& w_tilde;
    const Beamformer& w_dag;
};
using IterationObserver = std::function<void(const IterationDetail&)>;

/// Rank-1 reduction of an SDR optimum: R~ = R_bar and
/// W~_k = W_bar_k Q_k W_bar_k / tr(Q_k W_bar_k), which preserves the objective
/// and every constraint. Throws DegenerateUserError when tr(Q_k W_bar_k) is
/// numerically zero.
struct Rank1Extraction {
    CMatrix r_tilde;
    std::vector<CMatrix> w_tilde;
};
Rank1Extraction extract_rank1(const SubproblemSolution& sol,
                              const std::vector<CMatrix>& q_matrices);
/// Same reduction applied to a raw feasible pair (R_X, W_1..W_K).
Rank1Extraction extract_rank1(const CMatrix& r_x, const std::vector<CMatrix>& w,
                              const std::vector<CMatrix>& q_matrices);

/// Beamformer recovery: w~_k = W~_k h_k / sqrt(h_k^H W~_k h_k) and the sensing
/// block as a factor of the residual R~ - sum W~_k (Cholesky when definite,
/// eigenvalue square root with clipping at eig_floor otherwise). Throws when
/// the residual has an eigenvalue below -1e-6 tr(R~).
Beamformer recover_beamformers(const CMatrix& r_tilde, const std::vector<CMatrix>& w_tilde,
                               const std::vector<ChannelRow>& channels,
                               double eig_floor = 0.0);

/// Feasible starting beamformer from the expected-sensing-power convex
/// problem (objective tr(F_bar R_X) with F_bar the prior mixture of F(theta)).
/// Throws InfeasibleError when no beamformer meets (gamma_th, P_T).
Beamformer initialize(const SceneConfig& cfg, const std::vector<ChannelRow>& channels,
                      const DiscretizedPrior& prior_theta, const DiscretizedPrior& prior_alpha);

/// The full successive-convex-approximation loop over SDR subproblems with an
/// Armijo-stepped beamformer blend. Returns the last accepted beamformer and
/// the per-iteration trace.
std::pair<Beamformer, OptimizationTrace> sca_sdr(const SceneConfig& cfg,
                                                 const std::vector<ChannelRow>& channels,
                                                 const DiscretizedPrior& prior_theta,
                                                 const DiscretizedPrior& prior_alpha,
                                                 const OptimizerSettings& settings,
                                                 const IterationObserver& observer = {},
                                                 const Beamformer* warm_start = nullptr);

enum class BaselineKind { max_sinr_0deg, max_esinr, omni };
const char* to_string(BaselineKind k);

/// Benchmark schemes: a single convex solve plus rank-1 recovery.
///  - max_sinr_0deg: maximize tr(F(0) R_X) under the shared constraints;
///  - max_esinr:     maximize tr(F_bar R_X), F_bar the prior mixture;
///  - omni:          equal per-antenna power diag(R_X) = P_T/N_t 1, maximizing
///                   the minimum SINR slack.
Beamformer baseline(BaselineKind kind, const SceneConfig& cfg,
                    const std::vector<ChannelRow>& channels,
                    const DiscretizedPrior& prior_theta, const DiscretizedPrior& prior_alpha);

/// Independent power/SINR verifier used by tests and the CLI; computes both
/// from the beamformer columns alone (Eq.-12 path, no solver state).
struct BeamformerCheck {
    double power_w = 0.0;
    double min_sinr_margin = 0.0;  // min_k (sinr_k / gamma_th - 1)
    bool power_ok = false;
    bool sinr_ok = false;
    bool ok() const { return power_ok && sinr_ok; }
};
BeamformerCheck verify_beamformer(const Beamformer& bf, const std::vector<ChannelRow>& channels,
                                  const SceneConfig& cfg);

}  // namespace isac
