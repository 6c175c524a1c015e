#pragma once

#include "isac/scene.hpp"
#include "isac/specfun.hpp"

namespace isac {

/// Transmit sample covariance R_X (Hermitian, PSD, trace bounded by the power
/// budget when it describes a physical transmission).
struct Covariance {
    CMatrix r_x;

    double trace() const { return r_x.trace().real(); }
    /// Throws std::invalid_argument when Hermitian/PSD/power invariants fail.
    void validate(double power_budget_w) const;
};

/// Joint beamformer W = [W_c, W_s]: per-user columns plus the sensing block.
struct Beamformer {
    CMatrix w_comm;   // N_t x K
    CMatrix w_sense;  // N_t x N_t

    int n_tx() const { return static_cast<int>(w_sense.rows()); }
    int n_users() const { return static_cast<int>(w_comm.cols()); }
    CMatrix joint() const;
    Covariance covariance() const;  // W W^H
    double power() const;           // tr(W W^H)
};

/// Priors on the target parameters as quadrature grids; theta in radians.
DiscretizedPrior theta_prior(const SceneConfig& cfg);
DiscretizedPrior alpha_prior(const SceneConfig& cfg);

/// Closed-form detection probability of the phase-compensated matched filter:
/// P_d = 1/2 erfc(erfc^-1(2 Pf) - sqrt(|alpha|^2 tr(F(theta) R_X) / sigma_s^2)),
/// clamped to [0,1]. Throws std::invalid_argument when tr(F R_X) < -1e-8.
double detection_probability(double alpha_abs, double theta_rad, const Covariance& cov,
                             const SceneConfig& cfg);

/// Gradient of P_d with respect to R_X under the real inner product
/// <G, D> = Re tr(G^H D). A positive multiple of F(theta); returns zero and
/// sets *degenerate when tr(F R_X) falls below 1e-15 * P_T, where the
/// analytic expression has a 1/sqrt singularity.
CMatrix pd_gradient(double alpha_abs, double theta_rad, const Covariance& cov,
                    const SceneConfig& cfg, bool* degenerate = nullptr);

/// Prior-weighted average of detection_probability over the quadrature grids.
double expected_pd(const Covariance& cov, const DiscretizedPrior& prior_theta,
                   const DiscretizedPrior& prior_alpha, const SceneConfig& cfg);

/// Value and gradient of EP_d at one covariance, evaluated in a single pass
/// over the grid (the affine surrogate is value + <gradient, R - anchor>).
struct EpdLinearization {
    double value = 0.0;
    CMatrix gradient;
    bool any_degenerate = false;
};
EpdLinearization linearize_expected_pd(const Covariance& anchor,
                                       const DiscretizedPrior& prior_theta,
                                       const DiscretizedPrior& prior_alpha,
                                       const SceneConfig& cfg);

/// First-order Taylor surrogate of EP_d anchored at cov_anchor, evaluated at
/// cov_candidate. Exact at the anchor, affine in the candidate.
double surrogate_epd(const Covariance& cov_candidate, const Covariance& cov_anchor,
                     const DiscretizedPrior& prior_theta, const DiscretizedPrior& prior_alpha,
                     const SceneConfig& cfg);

/// Downlink SINR of user k: |h_k^H w_k|^2 over cross-user plus sensing
/// interference plus noise.
double sinr(int user_k, const Beamformer& bf, const std::vector<ChannelRow>& channels,
            const SceneConfig& cfg);

/// Transmit beampattern a(theta)^H R_X a(theta) in watts at each grid angle.
std::vector<double> beampattern(const Covariance& cov, const std::vector<double>& angles_rad,
                                const SceneConfig& cfg);

}  // namespace isac
