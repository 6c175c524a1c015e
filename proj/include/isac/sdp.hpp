#pragma once

#include <Eigen/Dense>
#include <vector>

namespace isac::sdp {

/// Standard-form semidefinite program over a product of real symmetric PSD
/// blocks (dimension-1 blocks double as nonnegative scalars):
///
///   minimize    sum_b <C_b, X_b>
///   subject to  sum_b <A_{i,b}, X_b> = rhs_i   (i = 1..m),   X_b PSD.
///
/// Constraints list only the blocks they touch. All coefficient matrices must
/// be symmetric.
struct Term {
    int block;
    Eigen::MatrixXd coeff;
};

struct Constraint {
    std::vector<Term> terms;
    double rhs = 0.0;
};

struct Problem {
    std::vector<int> dims;                 // block dimensions
    std::vector<Eigen::MatrixXd> cost;     // C_b per block
    std::vector<Constraint> constraints;

    int n_blocks() const { return static_cast<int>(dims.size()); }
    int n_constraints() const { return static_cast<int>(constraints.size()); }
};

enum class Status { optimal, max_iterations, numerical_failure };

struct Options {
    double tol_gap = 1e-8;    // relative duality gap
    double tol_feas = 1e-8;   // relative primal/dual infeasibility
    // Acceptance bound when the barrier parameter bottoms out before the
    // target tolerances are met (numerical floor of the XZ direction).
    double tol_gap_stalled = 1e-7;
    int max_iterations = 100;
    double step_fraction = 0.97;
};

struct Solution {
    Status status = Status::numerical_failure;
    std::vector<Eigen::MatrixXd> x;  // primal blocks
    std::vector<double> y;           // dual multipliers
    std::vector<Eigen::MatrixXd> s;  // dual slack blocks
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double rel_gap = 0.0;
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    int iterations = 0;
};

/// Infeasible-start Mehrotra predictor-corrector with the HKM (XZ) search
/// direction. Deterministic for fixed inputs. The caller is responsible for
/// sensible data scaling; see conic.cpp for the scaling applied upstream.
Solution solve(const Problem& problem, const Options& options = {});

}  // namespace isac::sdp
