#include "isac/conic.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <sstream>

using namespace isac;

namespace {

CMatrix random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
    return 0.5 * (a + a.adjoint()).eval();
}

Subproblem shell(const SceneConfig& cfg, const std::vector<ChannelRow>& channels) {
    Subproblem sp;
    sp.n_tx = cfg.n_tx;
    sp.gamma_lin = cfg.sinr_threshold_lin();
    sp.sigma_c2 = cfg.comm_noise_w();
    sp.power_budget = cfg.total_power_w();
    sp.objective_matrix = CMatrix::Zero(cfg.n_tx, cfg.n_tx);
    for (const auto& h : channels) sp.q_matrices.push_back(h.adjoint() * h);
    return sp;
}

}  // namespace

TEST_CASE("hermitian embedding round trip and spectrum") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 6;
        const CMatrix h = random_hermitian(n, rng);
        const Eigen::MatrixXd e = embed_hermitian(h);
        CHECK((e - e.transpose()).norm() < 1e-12 * (1.0 + e.norm()));
        CHECK((deembed_hermitian(e) - h).norm() <= 1e-12 * (1.0 + h.norm()));

        Eigen::SelfAdjointEigenSolver<CMatrix> eh(h, Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ee(e, Eigen::EigenvaluesOnly);
        for (int i = 0; i < n; ++i) {
            CHECK(ee.eigenvalues()(2 * i) ==
                  doctest::Approx(eh.eigenvalues()(i)).epsilon(1e-10));
            CHECK(ee.eigenvalues()(2 * i + 1) ==
                  doctest::Approx(eh.eigenvalues()(i)).epsilon(1e-10));
        }

        const CMatrix g = random_hermitian(n, rng);
        const double inner_c = (h.adjoint() * g).trace().real();
        const double inner_r = (embed_hermitian(h).transpose() * embed_hermitian(g)).trace();
        CHECK(inner_r == doctest::Approx(2.0 * inner_c).epsilon(1e-12));
    }
}

TEST_CASE("deembedding projects and preserves PSD") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd a(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) a(i, j) = gauss(rng);
    const Eigen::MatrixXd y = a * a.transpose();  // PSD, not of embedded form
    const CMatrix h = deembed_hermitian(y);
    CHECK((h - h.adjoint()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(h, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * y.trace());
}

TEST_CASE("assemble builds the linearized subproblem") {
    SceneConfig cfg;
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    const auto th = theta_prior(cfg);
    const auto al = alpha_prior(cfg);

    SUBCASE("degenerate anchor yields a feasibility problem") {
        const Covariance zero{CMatrix::Zero(cfg.n_tx, cfg.n_tx)};
        const Subproblem sp = assemble(zero, th, al, channels, cfg);
        CHECK(sp.objective_matrix.norm() == 0.0);
        CHECK(sp.n_users() == 2);
    }
    SUBCASE("reference scenario carries two rank-1 Q matrices") {
        std::mt19937_64 rng2(7);
        const Covariance r{oracle::random_psd(cfg.n_tx, cfg.total_power_w(), rng2)};
        const Subproblem sp = assemble(r, th, al, channels, cfg);
        CHECK(sp.q_matrices.size() == 2);
        for (const auto& q : sp.q_matrices) {
            Eigen::SelfAdjointEigenSolver<CMatrix> eig(q, Eigen::EigenvaluesOnly);
            const auto& ev = eig.eigenvalues();
            CHECK(ev(ev.size() - 2) <= 1e-10 * ev(ev.size() - 1));
        }
        // Surrogate consistency: constant term folds the anchor inner product.
        const double sur_anchor = (sp.objective_matrix.adjoint() * r.r_x).trace().real() +
                                  sp.constant_term;
        CHECK(sur_anchor == doctest::Approx(expected_pd(r, th, al, cfg)).epsilon(1e-12));
    }
}

TEST_CASE("solve without users matches the eigenvalue oracle") {
    SceneConfig cfg;
    cfg.users.clear();
    std::mt19937_64 rng(13);

    SUBCASE("rank-1 objective at broadside") {
        Subproblem sp = shell(cfg, {});
        sp.objective_matrix = target_f_matrix(0.0, cfg);
        const SubproblemSolution sol = solve(sp);
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(sol.objective_value ==
              doctest::Approx(cfg.total_power_w() * cfg.n_tx * cfg.n_rx).epsilon(1e-6));
        CHECK(sol.rel_gap <= 1e-7);
        // All power on the broadside beam.
        const CVector a = steering_tx(0.0, cfg.n_tx);
        const double beam = (a.adjoint() * sol.r_x_bar.r_x * a).value().real();
        CHECK(beam == doctest::Approx(cfg.total_power_w() * cfg.n_tx).epsilon(1e-6));
    }
    SUBCASE("generic Hermitian objective attains P lambda_max") {
        Subproblem sp = shell(cfg, {});
        sp.objective_matrix = random_hermitian(cfg.n_tx, rng);
        sp.objective_matrix += 3.0 * CMatrix::Identity(cfg.n_tx, cfg.n_tx);
        const SubproblemSolution sol = solve(sp);
        REQUIRE(sol.status == SolveStatus::optimal);
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(sp.objective_matrix, Eigen::EigenvaluesOnly);
        const double expected = cfg.total_power_w() * eig.eigenvalues().maxCoeff();
        CHECK(sol.objective_value == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("reference scenario solve satisfies every invariant") {
    SceneConfig cfg;  // gamma_th = 24 dB defaults
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    Subproblem sp = shell(cfg, channels);
    sp.objective_matrix = target_f_matrix(0.0, cfg);

    const SubproblemSolution sol = solve(sp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.rel_gap <= 1e-7 * (1.0 + std::fabs(sol.objective_value)));

    const SolutionCheck check = check_solution(sp, sol);
    CHECK(check.hermitian_ok);
    CHECK(check.psd_ok);
    CHECK(check.order_ok);
    CHECK(check.power_ok);
    CHECK(check.sinr_ok);

    SUBCASE("deterministic re-solve") {
        const SubproblemSolution again = solve(sp);
        REQUIRE(again.status == SolveStatus::optimal);
        CHECK(std::fabs(again.objective_value - sol.objective_value) <=
              1e-7 * (1.0 + std::fabs(sol.objective_value)));
    }
}

TEST_CASE("infeasible thresholds are reported as such") {
    SceneConfig cfg;
    cfg.sinr_threshold_db = 200.0;
    cfg.total_power_dbm = 20.0;
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    Subproblem sp = shell(cfg, channels);
    const SubproblemSolution sol = solve(sp);
    CHECK(sol.status == SolveStatus::infeasible);
    CHECK(sol.min_slack < 0.0);
}

TEST_CASE("equal-power diagonal variant") {
    SceneConfig cfg;
    cfg.sinr_threshold_db = 16.0;
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    Subproblem sp = shell(cfg, channels);
    sp.equal_power_diag = true;
    sp.maximize_min_slack = true;
    const SubproblemSolution sol = solve(sp);
    REQUIRE(sol.status == SolveStatus::optimal);
    const double target = cfg.total_power_w() / cfg.n_tx;
    for (int i = 0; i < cfg.n_tx; ++i)
        CHECK(sol.r_x_bar.r_x(i, i).real() == doctest::Approx(target).epsilon(1e-6));
    CHECK(check_solution(sp, sol).ok());
}

TEST_CASE("subproblem dump is parseable") {
    SceneConfig cfg;
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    Subproblem sp = shell(cfg, channels);
    sp.objective_matrix = target_f_matrix(0.1, cfg);
    sp.constant_term = 0.25;

    std::ostringstream os;
    dump_subproblem(sp, os);
    std::istringstream is(os.str());

    std::string magic, version;
    is >> magic >> version;
    CHECK(magic == "isacbf-subproblem");
    CHECK(version == "v1");
    int n = 0, k = 0;
    is >> n >> k;
    CHECK(n == cfg.n_tx);
    CHECK(k == 2);
    double gamma = 0, sigma = 0, power = 0, constant = 0;
    int diag = 0, minslack = 0;
    is >> gamma >> sigma >> power >> constant >> diag >> minslack;
    CHECK(gamma == doctest::Approx(cfg.sinr_threshold_lin()));
    CHECK(constant == 0.25);
    int rows = 0, cols = 0;
    is >> rows >> cols;
    CHECK(rows == cfg.n_tx);
    CHECK(cols == cfg.n_tx);
    double re = 0, im = 0;
    is >> re >> im;
    CHECK(re == doctest::Approx(sp.objective_matrix(0, 0).real()));
}

TEST_CASE("zero objective reduces to a feasibility solve") {
    SceneConfig cfg;
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    Subproblem sp = shell(cfg, channels);  // objective already zero
    const SubproblemSolution sol = solve(sp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective_value == 0.0);
    CHECK(check_solution(sp, sol).ok());
}

TEST_CASE("vanishing SINR threshold frees all power for sensing") {
    SceneConfig cfg;
    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    Subproblem sp = shell(cfg, channels);
    sp.gamma_lin = 0.0;
    sp.objective_matrix = target_f_matrix(0.0, cfg);
    const SubproblemSolution sol = solve(sp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective_value ==
          doctest::Approx(cfg.total_power_w() * cfg.n_tx * cfg.n_rx).epsilon(1e-6));
}
