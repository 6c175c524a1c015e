#pragma once

#include "isac/metrics.hpp"
#include "isac/sdp.hpp"

#include <iosfwd>

namespace isac {

enum class SolveStatus { optimal, infeasible, numerical_failure };
const char* to_string(SolveStatus s);

/// Convex subproblem on (R_X, W_1..W_K): linear objective <objective_matrix,
/// R_X> + constant_term, per-user linearized SINR constraints
/// tr(Q_k W_k) - gamma tr(Q_k (R_X - W_k)) >= gamma sigma_c^2, power constraint
/// tr(R_X) <= power_budget, and the order constraint R_X - sum_k W_k PSD.
/// A zero objective gives a pure feasibility problem.
struct Subproblem {
    CMatrix objective_matrix;      // Hermitian N_t x N_t
    double constant_term = 0.0;
    std::vector<CMatrix> q_matrices;  // rank-1 Hermitian Q_k = h_k h_k^H
    double gamma_lin = 0.0;           // linear SINR threshold
    double sigma_c2 = 0.0;            // comm noise, watts
    double power_budget = 0.0;        // watts
    int n_tx = 0;

    // Variants used by the baseline schemes.
    bool equal_power_diag = false;   // add diag(R_X) = power/N_t (drops the trace row)
    bool maximize_min_slack = false;  // ignore the objective, maximize min SINR slack

    int n_users() const { return static_cast<int>(q_matrices.size()); }
};

struct SubproblemSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    Covariance r_x_bar;            // R_X at the optimum
    std::vector<CMatrix> w_bars;   // per-user W_k at the optimum
    double objective_value = 0.0;  // <objective, R_X> + constant_term
    double min_slack = 0.0;        // worst SINR slack found by the feasibility phase, watts
    double rel_gap = 0.0;
    double solve_time_s = 0.0;
    int iterations = 0;
};

/// Real embedding of a Hermitian matrix: E(H) = [[Re H, -Im H], [Im H, Re H]].
/// E preserves products and positive semidefiniteness; every eigenvalue of H
/// appears twice in E(H), and <E(A), E(B)> = 2 Re tr(A^H B).
Eigen::MatrixXd embed_hermitian(const CMatrix& h);

/// Projection of a symmetric 2N x 2N matrix back to the Hermitian part whose
/// embedding is closest in Frobenius norm (exact inverse on embedded inputs).
CMatrix deembed_hermitian(const Eigen::MatrixXd& y);

/// Builds the SCA subproblem at an anchor covariance: the objective matrix is
/// the prior-weighted gradient of EP_d, the constant term the EP_d value.
Subproblem assemble(const Covariance& anchor, const DiscretizedPrior& prior_theta,
                    const DiscretizedPrior& prior_alpha,
                    const std::vector<ChannelRow>& channels, const SceneConfig& cfg);

/// Two-phase solve: a min-slack feasibility pass (shared with the min-slack
/// variant) that certifies SINR feasibility under the power budget, then the
/// actual objective. Deterministic for fixed inputs.
SubproblemSolution solve(const Subproblem& sp);

/// Callers that already hold a feasibility certificate (the SCA loop solves
/// the same constraint set every iteration) can skip the first phase.
struct SolveOptions {
    bool skip_feasibility_phase = false;
};
SubproblemSolution solve(const Subproblem& sp, const SolveOptions& opts);

/// Re-validates a reported optimum through an independent code path (complex
/// eigenvalue checks, Eq.-14 SINR form). Does not touch the solver.
struct SolutionCheck {
    bool hermitian_ok = false;
    bool psd_ok = false;     // every W_k
    bool order_ok = false;   // R_X - sum W_k
    bool power_ok = false;
    bool sinr_ok = false;
    double min_eig_w = 0.0;
    double min_eig_order = 0.0;
    double power_w = 0.0;
    double worst_sinr_margin = 0.0;  // min_k (sinr_k / gamma - 1), relative
    bool ok() const { return hermitian_ok && psd_ok && order_ok && power_ok && sinr_ok; }
};
SolutionCheck check_solution(const Subproblem& sp, const SubproblemSolution& sol);

/// Plain-text dump (dimensions header + row-major "re im" entries) for
/// cross-checking against external solvers.
void dump_subproblem(const Subproblem& sp, std::ostream& os);

}  // namespace isac
