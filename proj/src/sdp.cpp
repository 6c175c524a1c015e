#include "isac/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace isac::sdp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using BlockVec = std::vector<MatrixXd>;

double dot(const MatrixXd& a, const MatrixXd& b) { return a.cwiseProduct(b).sum(); }

double frob(const BlockVec& v) {
    double s = 0.0;
    for (const auto& b : v) s += b.squaredNorm();
    return std::sqrt(s);
}

BlockVec zeros_like(const std::vector<int>& dims) {
    BlockVec v;
    v.reserve(dims.size());
    for (int d : dims) v.push_back(MatrixXd::Zero(d, d));
    return v;
}

// <A_i, X> for every constraint.
VectorXd apply_a(const Problem& p, const BlockVec& x) {
    VectorXd out(p.n_constraints());
    for (int i = 0; i < p.n_constraints(); ++i) {
        double acc = 0.0;
        for (const Term& t : p.constraints[i].terms) acc += dot(t.coeff, x[t.block]);
        out(i) = acc;
    }
    return out;
}

// sum_i y_i A_i accumulated into block form.
BlockVec apply_at(const Problem& p, const VectorXd& y) {
    BlockVec out = zeros_like(p.dims);
    for (int i = 0; i < p.n_constraints(); ++i)
        for (const Term& t : p.constraints[i].terms) out[t.block] += y(i) * t.coeff;
    return out;
}

// Largest alpha in (0, cap] with B + alpha * D still PSD, given chol(B).
double max_step(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& d, double cap) {
    if (d.rows() == 1) {
        const double b = llt.matrixL()(0, 0);
        const double dv = d(0, 0);
        if (dv >= 0.0) return cap;
        return std::min(cap, -(b * b) / dv);
    }
    const MatrixXd l = llt.matrixL();
    const MatrixXd inner = l.triangularView<Eigen::Lower>().solve(
        l.triangularView<Eigen::Lower>().solve(d).transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin >= 0.0) return cap;
    return std::min(cap, -1.0 / lmin);
}

struct Workspace {
    std::vector<Eigen::LLT<MatrixXd>> chol_x;
    std::vector<Eigen::LLT<MatrixXd>> chol_s;
    BlockVec s_inv;
};

bool factor(const BlockVec& x, const BlockVec& s, Workspace& w) {
    const std::size_t nb = x.size();
    w.chol_x.resize(nb);
    w.chol_s.resize(nb);
    w.s_inv.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        w.chol_x[b].compute(x[b]);
        w.chol_s[b].compute(s[b]);
        if (w.chol_x[b].info() != Eigen::Success || w.chol_s[b].info() != Eigen::Success)
            return false;
        w.s_inv[b] = w.chol_s[b].solve(MatrixXd::Identity(s[b].rows(), s[b].cols()));
    }
    return true;
}

}  // namespace

Solution solve(const Problem& p, const Options& opt) {
    const int m = p.n_constraints();
    const int nb = p.n_blocks();
    if (static_cast<int>(p.cost.size()) != nb)
        throw std::invalid_argument("sdp::solve: cost blocks do not match dims");
    int n_total = 0;
    for (int d : p.dims) n_total += d;

    VectorXd b(m);
    for (int i = 0; i < m; ++i) b(i) = p.constraints[i].rhs;

    double max_a_norm = 1.0;
    for (const auto& con : p.constraints) {
        double s = 0.0;
        for (const Term& t : con.terms) s += t.coeff.squaredNorm();
        max_a_norm = std::max(max_a_norm, std::sqrt(s));
    }
    const double c_norm = frob(p.cost);
    const double b_norm = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;

    // Cold start on the central ray; magnitudes follow the data norms.
    const double eta_p = 10.0 * std::max({1.0, b_norm, std::sqrt(double(n_total))});
    const double eta_d = 10.0 * std::max({1.0, c_norm, max_a_norm});

    Solution sol;
    sol.x = zeros_like(p.dims);
    sol.s = zeros_like(p.dims);
    BlockVec& x = sol.x;
    BlockVec& s = sol.s;
    VectorXd y = VectorXd::Zero(m);
    for (int bidx = 0; bidx < nb; ++bidx) {
        x[bidx] = eta_p * MatrixXd::Identity(p.dims[bidx], p.dims[bidx]);
        s[bidx] = eta_d * MatrixXd::Identity(p.dims[bidx], p.dims[bidx]);
    }

    Workspace w;
    BlockVec dx = zeros_like(p.dims), ds = zeros_like(p.dims), rd = zeros_like(p.dims);
    const double bden = 1.0 + b.norm();
    const double cden = 1.0 + c_norm;
    double mu_prev = std::numeric_limits<double>::infinity();
    int stagnant = 0;

    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        sol.iterations = iter;

        // Residuals and convergence metrics.
        const VectorXd rp = b - apply_a(p, x);
        const BlockVec aty = apply_at(p, y);
        for (int bi = 0; bi < nb; ++bi) rd[bi] = p.cost[bi] - s[bi] - aty[bi];

        double xs = 0.0, pobj = 0.0;
        for (int bi = 0; bi < nb; ++bi) {
            xs += dot(x[bi], s[bi]);
            pobj += dot(p.cost[bi], x[bi]);
        }
        const double dobj = b.dot(y);
        const double mu = xs / n_total;

        sol.primal_objective = pobj;
        sol.dual_objective = dobj;
        sol.primal_infeas = rp.norm() / bden;
        sol.dual_infeas = frob(rd) / cden;
        sol.rel_gap = std::fabs(pobj - dobj) / (1.0 + std::fabs(pobj) + std::fabs(dobj));

        if (std::getenv("ISAC_SDP_DEBUG"))
            std::fprintf(stderr, "sdp it=%3d mu=%.3e pinf=%.3e dinf=%.3e gap=%.3e\n", iter,
                         mu, sol.primal_infeas, sol.dual_infeas, sol.rel_gap);

        if (sol.primal_infeas <= opt.tol_feas && sol.dual_infeas <= opt.tol_feas &&
            sol.rel_gap <= opt.tol_gap) {
            sol.status = Status::optimal;
            sol.y.assign(y.data(), y.data() + m);
            return sol;
        }

        // Barrier parameter at its numerical floor: accept at the relaxed gap
        // bound, otherwise give up rather than cycle. Slow-but-alive phases
        // (hard instances crawl at ratios near 0.9) are left to run.
        stagnant = (mu > 0.97 * mu_prev) ? stagnant + 1 : 0;
        mu_prev = mu;
        if (stagnant >= 6) {
            const double tf = std::max(opt.tol_feas, 1e-7);
            sol.status = (sol.primal_infeas <= tf && sol.dual_infeas <= tf &&
                          sol.rel_gap <= opt.tol_gap_stalled)
                             ? Status::optimal
                             : Status::numerical_failure;
            sol.y.assign(y.data(), y.data() + m);
            return sol;
        }

        if (!factor(x, s, w)) {
            sol.status = Status::numerical_failure;
            sol.y.assign(y.data(), y.data() + m);
            return sol;
        }

        // Schur complement M_ij = tr(A_i X A_j S^-1); symmetric PD.
        MatrixXd schur = MatrixXd::Zero(m, m);
        std::vector<BlockVec> xas(m);  // X A_j S^-1 per touched block, dense per constraint
        for (int j = 0; j < m; ++j) {
            xas[j] = BlockVec(nb);
            for (const Term& t : p.constraints[j].terms)
                xas[j][t.block] = x[t.block] * t.coeff * w.s_inv[t.block];
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double acc = 0.0;
                for (const Term& t : p.constraints[i].terms) {
                    const MatrixXd& z = xas[j][t.block];
                    if (z.size() != 0) acc += dot(t.coeff, z);
                }
                schur(i, j) = acc;
            }
        schur = 0.5 * (schur + schur.transpose()).eval();

        Eigen::LDLT<MatrixXd> schur_fact(schur);
        if (schur_fact.info() != Eigen::Success) {
            schur += 1e-13 * schur.trace() / m * MatrixXd::Identity(m, m);
            schur_fact.compute(schur);
            if (schur_fact.info() != Eigen::Success) {
                sol.status = Status::numerical_failure;
                sol.y.assign(y.data(), y.data() + m);
                return sol;
            }
        }

        // One Newton solve for a given complementarity target R_c.
        auto newton = [&](const BlockVec& rc, VectorXd& dy_out, BlockVec& dx_out,
                          BlockVec& ds_out) {
            BlockVec h(nb);
            for (int bi = 0; bi < nb; ++bi)
                h[bi] = (x[bi] * rd[bi] - rc[bi]) * w.s_inv[bi];
            VectorXd rhs = rp;
            for (int i = 0; i < m; ++i) {
                double acc = 0.0;
                for (const Term& t : p.constraints[i].terms) acc += dot(t.coeff, h[t.block]);
                rhs(i) += acc;
            }
            dy_out = schur_fact.solve(rhs);
            const BlockVec atdy = apply_at(p, dy_out);
            for (int bi = 0; bi < nb; ++bi) {
                ds_out[bi] = rd[bi] - atdy[bi];
                MatrixXd dxb = (rc[bi] - x[bi] * ds_out[bi]) * w.s_inv[bi];
                dx_out[bi] = 0.5 * (dxb + dxb.transpose());
            }
        };

        // Predictor (affine scaling).
        BlockVec rc = zeros_like(p.dims);
        for (int bi = 0; bi < nb; ++bi) rc[bi] = -x[bi] * s[bi];
        VectorXd dy(m);
        newton(rc, dy, dx, ds);

        double ap = 1.0, ad = 1.0;
        for (int bi = 0; bi < nb; ++bi) {
            ap = std::min(ap, max_step(w.chol_x[bi], dx[bi], 1.0));
            ad = std::min(ad, max_step(w.chol_s[bi], ds[bi], 1.0));
        }
        double xs_aff = 0.0;
        for (int bi = 0; bi < nb; ++bi)
            xs_aff += dot(x[bi] + ap * dx[bi], s[bi] + ad * ds[bi]);
        const double mu_aff = xs_aff / n_total;
        double sigma = std::pow(mu_aff / mu, 3.0);
        sigma = std::min(0.99, std::max(1e-8, sigma));

        // Corrector with Mehrotra second-order term.
        for (int bi = 0; bi < nb; ++bi) {
            rc[bi] = -x[bi] * s[bi] - dx[bi] * ds[bi];
            rc[bi].diagonal().array() += sigma * mu;
        }
        newton(rc, dy, dx, ds);

        ap = std::numeric_limits<double>::infinity();
        ad = std::numeric_limits<double>::infinity();
        for (int bi = 0; bi < nb; ++bi) {
            ap = std::min(ap, max_step(w.chol_x[bi], dx[bi], 1e30));
            ad = std::min(ad, max_step(w.chol_s[bi], ds[bi], 1e30));
        }
        const double tau = (mu > 1e-6) ? opt.step_fraction : std::max(opt.step_fraction, 0.98);
        ap = std::min(1.0, tau * ap);
        ad = std::min(1.0, tau * ad);
        if (ap < 1e-10 && ad < 1e-10) {
            sol.status = Status::numerical_failure;
            sol.y.assign(y.data(), y.data() + m);
            return sol;
        }

        for (int bi = 0; bi < nb; ++bi) {
            x[bi] += ap * dx[bi];
            s[bi] += ad * ds[bi];
            x[bi] = 0.5 * (x[bi] + x[bi].transpose()).eval();
            s[bi] = 0.5 * (s[bi] + s[bi].transpose()).eval();
        }
        y += ad * dy;
    }

    sol.status = Status::max_iterations;
    sol.y.assign(y.data(), y.data() + m);
    return sol;
}

}  // namespace isac::sdp
