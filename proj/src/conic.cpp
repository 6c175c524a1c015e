#include "isac/conic.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace isac {

namespace {

using Eigen::MatrixXd;

// Block layout of the embedded standard form: block 0 holds the order residual
// T = R_X - sum_k W_k, blocks 1..K the W_k, followed by scalar slack blocks.
// Variables are kept in units of the power budget so the solver sees O(1) data.
struct Layout {
    int n = 0;          // N_t
    int k = 0;          // users
    bool diag_rows = false;
    bool min_slack = false;
    int t_block() const { return 0; }
    int w_block(int j) const { return 1 + j; }
    int first_scalar() const { return 1 + k; }
};

// Embedding rule for one complex constraint/objective term: A_real = E(A)/2,
// which keeps <A_real, E(X)> = Re tr(A^H X).
MatrixXd half_embed(const CMatrix& a) { return 0.5 * embed_hermitian(a); }

double hermitian_residual(const CMatrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

void require_hermitian(const CMatrix& a, const char* what) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (hermitian_residual(a) > 1e-10 * scale)
        throw std::invalid_argument(std::string(what) + ": matrix is not Hermitian");
}

struct BuiltProblem {
    sdp::Problem prob;
    Layout layout;
    double t_shift = 0.0;   // min-slack shift (scaled units)
    double t_scale = 1.0;   // min-slack variable scale
    int t_scalar_index = -1;  // scalar block of the min-slack variable
};

// Assembles the embedded standard form. with_min_slack adds the shifted
// epigraph variable t to every SINR row and (when asked) to the objective.
BuiltProblem build(const Subproblem& sp, bool with_min_slack, bool min_slack_objective) {
    const int n = sp.n_tx;
    const int k = sp.n_users();
    const int en = 2 * n;
    const double p = sp.power_budget;
    const double gamma = sp.gamma_lin;

    BuiltProblem bp;
    bp.layout = Layout{n, k, sp.equal_power_diag, min_slack_objective};

    sdp::Problem& pr = bp.prob;
    for (int b = 0; b < 1 + k; ++b) pr.dims.push_back(en);

    // Scalar blocks: one slack per SINR row, one for the trace row (unless the
    // diagonal pin makes it redundant), one epigraph variable when requested.
    std::vector<int> sinr_slack(k, -1);
    for (int j = 0; j < k; ++j) {
        sinr_slack[j] = static_cast<int>(pr.dims.size());
        pr.dims.push_back(1);
    }
    int power_slack = -1;
    if (!sp.equal_power_diag) {
        power_slack = static_cast<int>(pr.dims.size());
        pr.dims.push_back(1);
    }
    if (with_min_slack) {
        bp.t_scalar_index = static_cast<int>(pr.dims.size());
        pr.dims.push_back(1);
    }

    pr.cost.assign(pr.dims.size(), MatrixXd());
    for (std::size_t b = 0; b < pr.dims.size(); ++b)
        pr.cost[b] = MatrixXd::Zero(pr.dims[b], pr.dims[b]);

    // SINR rows, normalized per user by tr(Q_k) and the power unit.
    std::vector<double> rhs_scaled(k, 0.0);
    double max_rhs = 0.0;
    for (int j = 0; j < k; ++j) {
        const double q_tr = sp.q_matrices[j].trace().real();
        if (!(q_tr > 0.0)) throw std::invalid_argument("conic: Q_k with nonpositive trace");
        rhs_scaled[j] = gamma * sp.sigma_c2 / (q_tr * p);
        max_rhs = std::max(max_rhs, rhs_scaled[j]);
    }
    if (with_min_slack) {
        bp.t_shift = -(gamma + max_rhs + 1.0);
        bp.t_scale = 1.0 + gamma + max_rhs;
    }

    for (int j = 0; j < k; ++j) {
        const double q_tr = sp.q_matrices[j].trace().real();
        const CMatrix q_hat = sp.q_matrices[j] / q_tr;
        sdp::Constraint row;
        row.terms.push_back({bp.layout.t_block(), -gamma * half_embed(q_hat)});
        for (int jj = 0; jj < k; ++jj) {
            const double w = (jj == j) ? 1.0 : -gamma;
            row.terms.push_back({bp.layout.w_block(jj), w * half_embed(q_hat)});
        }
        row.terms.push_back({sinr_slack[j], -MatrixXd::Identity(1, 1)});
        row.rhs = rhs_scaled[j];
        if (with_min_slack) {
            row.terms.push_back({bp.t_scalar_index, -bp.t_scale * MatrixXd::Identity(1, 1)});
            row.rhs += bp.t_shift;
        }
        // Normalize the row so the Schur complement stays well conditioned.
        double row_norm = 1.0;
        for (const auto& t : row.terms) row_norm = std::max(row_norm, t.coeff.norm());
        for (auto& t : row.terms) t.coeff /= row_norm;
        row.rhs /= row_norm;
        pr.constraints.push_back(std::move(row));
    }

    if (sp.equal_power_diag) {
        // diag(R_X) = p / N_t, expressed on T + sum W_k; unit diagonal target
        // after power normalization.
        for (int i = 0; i < n; ++i) {
            CMatrix e = CMatrix::Zero(n, n);
            e(i, i) = 1.0;
            sdp::Constraint row;
            const MatrixXd er = half_embed(e);
            for (int b = 0; b < 1 + k; ++b) row.terms.push_back({b, er});
            row.rhs = 1.0 / n;
            pr.constraints.push_back(std::move(row));
        }
    } else {
        sdp::Constraint row;
        const MatrixXd half_eye = 0.5 * MatrixXd::Identity(en, en);
        for (int b = 0; b < 1 + k; ++b) row.terms.push_back({b, half_eye});
        row.terms.push_back({power_slack, MatrixXd::Identity(1, 1)});
        row.rhs = 1.0;
        pr.constraints.push_back(std::move(row));
    }

    if (min_slack_objective) {
        pr.cost[bp.t_scalar_index](0, 0) = -1.0;  // maximize t
    } else {
        const double g_norm = sp.objective_matrix.norm();
        if (g_norm > 0.0) {
            const MatrixXd c = -half_embed(sp.objective_matrix / g_norm);
            for (int b = 0; b < 1 + k; ++b) pr.cost[b] = c;
        }
    }
    return bp;
}

struct Extracted {
    CMatrix r_x;
    std::vector<CMatrix> w;
};

Extracted extract(const BuiltProblem& bp, const sdp::Solution& s, double power_budget) {
    Extracted e;
    const int k = bp.layout.k;
    CMatrix t = deembed_hermitian(s.x[bp.layout.t_block()]);
    e.w.resize(k);
    e.r_x = t;
    for (int j = 0; j < k; ++j) {
        e.w[j] = power_budget * deembed_hermitian(s.x[bp.layout.w_block(j)]);
        e.r_x += deembed_hermitian(s.x[bp.layout.w_block(j)]);
    }
    e.r_x *= power_budget;
    return e;
}

}  // namespace

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

Eigen::MatrixXd embed_hermitian(const CMatrix& h) {
    const int n = static_cast<int>(h.rows());
    if (h.cols() != n) throw std::invalid_argument("embed_hermitian: not square");
    MatrixXd e(2 * n, 2 * n);
    e.topLeftCorner(n, n) = h.real();
    e.bottomRightCorner(n, n) = h.real();
    e.topRightCorner(n, n) = -h.imag();
    e.bottomLeftCorner(n, n) = h.imag();
    return e;
}

CMatrix deembed_hermitian(const Eigen::MatrixXd& y) {
    const int en = static_cast<int>(y.rows());
    if (y.cols() != en || en % 2 != 0)
        throw std::invalid_argument("deembed_hermitian: bad dimensions");
    const int n = en / 2;
    const MatrixXd re = 0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
    const MatrixXd im = 0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
    CMatrix h = re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
    return 0.5 * (h + h.adjoint()).eval();
}

Subproblem assemble(const Covariance& anchor, const DiscretizedPrior& prior_theta,
                    const DiscretizedPrior& prior_alpha,
                    const std::vector<ChannelRow>& channels, const SceneConfig& cfg) {
    Subproblem sp;
    sp.n_tx = cfg.n_tx;
    sp.gamma_lin = cfg.sinr_threshold_lin();
    sp.sigma_c2 = cfg.comm_noise_w();
    sp.power_budget = cfg.total_power_w();
    for (const ChannelRow& h : channels) sp.q_matrices.push_back(h.adjoint() * h);

    const EpdLinearization lin = linearize_expected_pd(anchor, prior_theta, prior_alpha, cfg);
    sp.objective_matrix = lin.gradient;
    // The affine surrogate is value + <g, R - anchor>; fold the anchor part
    // into the constant so the solver objective is plain <g, R>.
    sp.constant_term =
        lin.value - (lin.gradient.adjoint() * anchor.r_x).trace().real();
    return sp;
}

SubproblemSolution solve(const Subproblem& sp) { return solve(sp, SolveOptions{}); }

SubproblemSolution solve(const Subproblem& sp, const SolveOptions& solve_opts) {
    const auto t0 = std::chrono::steady_clock::now();
    SubproblemSolution out;
    require_hermitian(sp.objective_matrix, "conic objective");
    for (const auto& q : sp.q_matrices) require_hermitian(q, "conic Q_k");
    if (!(sp.power_budget > 0.0)) throw std::invalid_argument("conic: power budget <= 0");

    sdp::Options opts;
    const double slack_tol = 1e-6 * (1.0 + sp.gamma_lin);

    auto finish_time = [&] {
        out.solve_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    // Feasibility phase: maximize the worst SINR slack. Skipped when there is
    // nothing to violate; a min-slack request without users degenerates to a
    // plain feasibility solve below.
    const bool need_phase1 =
        sp.n_users() > 0 && (!solve_opts.skip_feasibility_phase || sp.maximize_min_slack);
    if (need_phase1) {
        BuiltProblem p1 = build(sp, true, true);
        const sdp::Solution s1 = sdp::solve(p1.prob, opts);
        out.iterations += s1.iterations;
        if (s1.status == sdp::Status::numerical_failure) {
            out.status = SolveStatus::numerical_failure;
            finish_time();
            return out;
        }
        const double t_star =
            p1.t_scale * s1.x[p1.t_scalar_index](0, 0) + p1.t_shift;
        out.min_slack = t_star * sp.power_budget;  // back to watt-scaled slack units
        if (t_star < -slack_tol) {
            out.status = SolveStatus::infeasible;
            finish_time();
            return out;
        }
        if (sp.maximize_min_slack) {
            if (s1.status != sdp::Status::optimal) {
                out.status = SolveStatus::numerical_failure;
                finish_time();
                return out;
            }
            const Extracted e = extract(p1, s1, sp.power_budget);
            out.r_x_bar = Covariance{e.r_x};
            out.w_bars = e.w;
            out.objective_value =
                (sp.objective_matrix.adjoint() * e.r_x).trace().real() + sp.constant_term;
            out.rel_gap = s1.rel_gap;
            out.status = SolveStatus::optimal;
            finish_time();
            return out;
        }
    }

    BuiltProblem p2 = build(sp, false, false);
    const sdp::Solution s2 = sdp::solve(p2.prob, opts);
    out.iterations += s2.iterations;
    if (s2.status != sdp::Status::optimal) {
        out.status = SolveStatus::numerical_failure;
        finish_time();
        return out;
    }
    const Extracted e = extract(p2, s2, sp.power_budget);
    out.r_x_bar = Covariance{e.r_x};
    out.w_bars = e.w;
    out.objective_value =
        (sp.objective_matrix.adjoint() * e.r_x).trace().real() + sp.constant_term;
    out.rel_gap = s2.rel_gap;
    out.status = SolveStatus::optimal;
    finish_time();
    return out;
}

SolutionCheck check_solution(const Subproblem& sp, const SubproblemSolution& sol) {
    SolutionCheck c;
    if (sol.status != SolveStatus::optimal) return c;
    const CMatrix& r = sol.r_x_bar.r_x;
    const double scale = std::max(sp.power_budget, sol.r_x_bar.trace());

    c.hermitian_ok = hermitian_residual(r) <= 1e-8 * scale;
    for (const auto& w : sol.w_bars)
        c.hermitian_ok = c.hermitian_ok && hermitian_residual(w) <= 1e-8 * scale;

    c.min_eig_w = 0.0;
    CMatrix order = r;
    for (const auto& w : sol.w_bars) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(w, Eigen::EigenvaluesOnly);
        c.min_eig_w = std::min(c.min_eig_w, eig.eigenvalues().minCoeff());
        order -= w;
    }
    c.psd_ok = c.min_eig_w >= -1e-7 * scale;

    Eigen::SelfAdjointEigenSolver<CMatrix> eig_order(order, Eigen::EigenvaluesOnly);
    c.min_eig_order = eig_order.eigenvalues().minCoeff();
    c.order_ok = c.min_eig_order >= -1e-7 * scale;

    c.power_w = sol.r_x_bar.trace();
    c.power_ok = c.power_w <= sp.power_budget + 1e-6;

    c.worst_sinr_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < sp.n_users(); ++k) {
        const CMatrix& q = sp.q_matrices[k];
        const double num = (q * sol.w_bars[k]).trace().real();
        const double den = (q * (r - sol.w_bars[k])).trace().real() + sp.sigma_c2;
        const double sinr_k = num / den;
        c.worst_sinr_margin = std::min(c.worst_sinr_margin, sinr_k / sp.gamma_lin - 1.0);
    }
    if (sp.n_users() == 0) c.worst_sinr_margin = 0.0;
    c.sinr_ok = c.worst_sinr_margin >= -1e-6;
    return c;
}

void dump_subproblem(const Subproblem& sp, std::ostream& os) {
    os.precision(17);
    os << "isacbf-subproblem v1\n";
    os << sp.n_tx << " " << sp.n_users() << "\n";
    os << sp.gamma_lin << " " << sp.sigma_c2 << " " << sp.power_budget << " "
       << sp.constant_term << " " << (sp.equal_power_diag ? 1 : 0) << " "
       << (sp.maximize_min_slack ? 1 : 0) << "\n";
    auto put = [&](const CMatrix& m) {
        os << m.rows() << " " << m.cols() << "\n";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (j) os << " ";
                os << m(i, j).real() << " " << m(i, j).imag();
            }
            os << "\n";
        }
    };
    put(sp.objective_matrix);
    for (const auto& q : sp.q_matrices) put(q);
}

}  // namespace isac
