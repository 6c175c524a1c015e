#include "isac/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace isac {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// tr(F(theta) R) = N_r * a^H R a; real for Hermitian R.
double sensing_trace(const CVector& a, const Covariance& cov, int n_rx) {
    const Complex q = (a.adjoint() * cov.r_x * a).value();
    return static_cast<double>(n_rx) * q.real();
}

// d P_d / d u at u = sqrt(SNR): exp(-(c - u)^2) / sqrt(pi).
double pd_slope(double c, double u) {
    const double g = c - u;
    return std::exp(-g * g) / kSqrtPi;
}

}  // namespace

void Covariance::validate(double power_budget_w) const {
    if (r_x.rows() != r_x.cols()) throw std::invalid_argument("Covariance: not square");
    const double scale = std::max(1e-300, std::abs(trace()));
    if ((r_x - r_x.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("Covariance: not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(r_x, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
        throw std::invalid_argument("Covariance: not positive semidefinite");
    if (trace() > power_budget_w + 1e-6)
        throw std::invalid_argument("Covariance: exceeds power budget");
}

CMatrix Beamformer::joint() const {
    CMatrix w(w_sense.rows(), w_comm.cols() + w_sense.cols());
    w << w_comm, w_sense;
    return w;
}

Covariance Beamformer::covariance() const {
    const CMatrix w = joint();
    return Covariance{w * w.adjoint()};
}

double Beamformer::power() const { return covariance().trace(); }

DiscretizedPrior theta_prior(const SceneConfig& cfg) {
    return discretize_gaussian(deg_to_rad(cfg.target.theta_mean_deg),
                               deg_to_rad(cfg.target.theta_std_deg), cfg.target.grid_m,
                               cfg.target.trunc_theta_sigmas);
}

DiscretizedPrior alpha_prior(const SceneConfig& cfg) {
    return discretize_rayleigh(cfg.alpha_scale(), cfg.target.grid_n,
                               cfg.target.trunc_alpha_sigmas);
}

double detection_probability(double alpha_abs, double theta_rad, const Covariance& cov,
                             const SceneConfig& cfg) {
    const CVector a = steering_tx(theta_rad, cfg.n_tx);
    double t = sensing_trace(a, cov, cfg.n_rx);
    if (t < -1e-8) throw std::invalid_argument("detection_probability: tr(F R_X) negative");
    if (t < 0.0) t = 0.0;
    const double u = std::sqrt(alpha_abs * alpha_abs * t / cfg.sense_noise_w());
    if (u == 0.0) return cfg.false_alarm;  // no echo energy: detection at chance
    const double c = erfc_inv(2.0 * cfg.false_alarm);
    return clamp01(0.5 * erfc(c - u));
}

CMatrix pd_gradient(double alpha_abs, double theta_rad, const Covariance& cov,
                    const SceneConfig& cfg, bool* degenerate) {
    if (degenerate) *degenerate = false;
    const CVector a = steering_tx(theta_rad, cfg.n_tx);
    const double t = sensing_trace(a, cov, cfg.n_rx);
    const double eps_num = 1e-15 * cfg.total_power_w();
    if (t <= eps_num) {
        if (degenerate) *degenerate = true;
        return CMatrix::Zero(cfg.n_tx, cfg.n_tx);
    }
    if (alpha_abs == 0.0) return CMatrix::Zero(cfg.n_tx, cfg.n_tx);

    const double sigma2 = cfg.sense_noise_w();
    const double c = erfc_inv(2.0 * cfg.false_alarm);
    const double u = std::sqrt(alpha_abs * alpha_abs * t / sigma2);
    // d P_d / d tr = slope(u) * |alpha|^2 / (2 sigma^2 u); gradient of the
    // trace itself is F(theta) under <G,D> = Re tr(G^H D).
    const double coeff =
        pd_slope(c, u) * alpha_abs * alpha_abs / (2.0 * sigma2 * u) * cfg.n_rx;
    return coeff * (a * a.adjoint());
}

double expected_pd(const Covariance& cov, const DiscretizedPrior& prior_theta,
                   const DiscretizedPrior& prior_alpha, const SceneConfig& cfg) {
    prior_theta.validate();
    prior_alpha.validate();
    const double sigma2 = cfg.sense_noise_w();
    const double c = erfc_inv(2.0 * cfg.false_alarm);
    double acc = 0.0;
    bool any_energy = false;
    for (int m = 0; m < prior_theta.size(); ++m) {
        const CVector a = steering_tx(prior_theta.nodes[m], cfg.n_tx);
        double t = sensing_trace(a, cov, cfg.n_rx);
        if (t < -1e-8) throw std::invalid_argument("expected_pd: tr(F R_X) negative");
        if (t < 0.0) t = 0.0;
        double inner = 0.0;
        for (int n = 0; n < prior_alpha.size(); ++n) {
            const double al = prior_alpha.nodes[n];
            const double u = std::sqrt(al * al * t / sigma2);
            if (u == 0.0) {
                inner += prior_alpha.weights[n] * cfg.false_alarm;
                continue;
            }
            any_energy = true;
            inner += prior_alpha.weights[n] * clamp01(0.5 * erfc(c - u));
        }
        acc += prior_theta.weights[m] * inner;
    }
    if (!any_energy) return cfg.false_alarm;  // sensing-blind covariance
    return clamp01(acc);
}

EpdLinearization linearize_expected_pd(const Covariance& anchor,
                                       const DiscretizedPrior& prior_theta,
                                       const DiscretizedPrior& prior_alpha,
                                       const SceneConfig& cfg) {
    prior_theta.validate();
    prior_alpha.validate();
    const double sigma2 = cfg.sense_noise_w();
    const double c = erfc_inv(2.0 * cfg.false_alarm);
    const double eps_num = 1e-15 * cfg.total_power_w();

    EpdLinearization lin;
    lin.gradient = CMatrix::Zero(cfg.n_tx, cfg.n_tx);
    for (int m = 0; m < prior_theta.size(); ++m) {
        const CVector a = steering_tx(prior_theta.nodes[m], cfg.n_tx);
        double t = sensing_trace(a, anchor, cfg.n_rx);
        if (t < 0.0) t = 0.0;
        double value_m = 0.0;
        double coeff_m = 0.0;
        for (int n = 0; n < prior_alpha.size(); ++n) {
            const double al = prior_alpha.nodes[n];
            const double u = std::sqrt(al * al * t / sigma2);
            value_m += prior_alpha.weights[n] * clamp01(0.5 * erfc(c - u));
            if (t <= eps_num) {
                lin.any_degenerate = true;
            } else if (al > 0.0) {
                coeff_m +=
                    prior_alpha.weights[n] * pd_slope(c, u) * al * al / (2.0 * sigma2 * u);
            }
        }
        lin.value += prior_theta.weights[m] * value_m;
        if (coeff_m != 0.0)
            lin.gradient +=
                (prior_theta.weights[m] * coeff_m * cfg.n_rx) * (a * a.adjoint());
    }
    return lin;
}

double surrogate_epd(const Covariance& cov_candidate, const Covariance& cov_anchor,
                     const DiscretizedPrior& prior_theta, const DiscretizedPrior& prior_alpha,
                     const SceneConfig& cfg) {
    const EpdLinearization lin =
        linearize_expected_pd(cov_anchor, prior_theta, prior_alpha, cfg);
    const CMatrix diff = cov_candidate.r_x - cov_anchor.r_x;
    const double inner = (lin.gradient.adjoint() * diff).trace().real();
    return lin.value + inner;
}

double sinr(int user_k, const Beamformer& bf, const std::vector<ChannelRow>& channels,
            const SceneConfig& cfg) {
    const int k_count = bf.n_users();
    if (static_cast<int>(channels.size()) != k_count)
        throw std::invalid_argument("sinr: channel count does not match beamformer");
    if (user_k < 0 || user_k >= k_count) throw std::invalid_argument("sinr: bad user index");

    const ChannelRow& h = channels[user_k];  // h_k^H
    double interference = 0.0;
    for (int i = 0; i < k_count; ++i) {
        if (i == user_k) continue;
        interference += std::norm((h * bf.w_comm.col(i)).value());
    }
    interference += (h * bf.w_sense).squaredNorm();
    const double signal = std::norm((h * bf.w_comm.col(user_k)).value());
    return signal / (interference + cfg.comm_noise_w());
}

std::vector<double> beampattern(const Covariance& cov, const std::vector<double>& angles_rad,
                                const SceneConfig& cfg) {
    std::vector<double> out;
    out.reserve(angles_rad.size());
    for (double th : angles_rad) {
        const CVector a = steering_tx(th, cfg.n_tx);
        out.push_back((a.adjoint() * cov.r_x * a).value().real());
    }
    return out;
}

}  // namespace isac
