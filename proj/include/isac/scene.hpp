#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using ChannelRow = Eigen::RowVectorXcd;  // h_k^H, 1 x N_t

constexpr double kSpeedOfLight = 299792458.0;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UserPlacement {
    double angle_deg = 0.0;
    double distance_m = 0.0;
};

/// Prior on the target parameters: Gaussian azimuth, Rayleigh |alpha|.
/// The Rayleigh scale is either given explicitly (alpha_sigma > 0) or derived
/// from the radar range equation using (rcs, range_m).
struct TargetPriorConfig {
    double theta_mean_deg = 0.0;
    double theta_std_deg = 3.1622776601683795;  // sqrt(10)
    double alpha_sigma = 0.0;                   // 0 => derive from rcs/range_m
    double rcs = 2.0;
    double range_m = 30.0;
    int grid_m = 61;  // azimuth nodes
    int grid_n = 81;  // |alpha| nodes
    double trunc_theta_sigmas = 4.0;
    double trunc_alpha_sigmas = 6.0;
};

/// Knobs of the outer optimization loop; kept with the scenario so a config
/// file fully determines a run.
struct OptimizerSettings {
    int max_iters = 50;
    double tol = 1e-4;          // stop when step * ||W_dag - W||_F falls below
    double armijo_beta = 0.5;   // backtracking contraction
    double armijo_c1 = 1e-4;    // sufficient-increase coefficient
    double jitter = 0.0;        // eigenvalue floor used when repairing the sensing residual
    // Strength of the proximal term added to the linearized objective,
    // relative to ||grad||_F / P_T; keeps the subproblem solution anchored
    // (a pure first-order surrogate cycles between far vertices).
    double prox_weight = 2.0;

    void validate() const;
};

/// Physical scenario: arrays, budgets, users, target prior, algorithm knobs.
/// Angles are degrees at this boundary and radians everywhere else; powers are
/// dBm here and linear watts everywhere else.
struct SceneConfig {
    int n_tx = 16;
    int n_rx = 16;
    double carrier_hz = 2.4e9;
    double total_power_dbm = 20.0;
    double comm_noise_dbm = -94.0;
    double sense_noise_dbm = -94.0;
    std::vector<UserPlacement> users = {{-45.0, 200.0}, {45.0, 200.0}};
    double rician_kappa = 4.0;
    double pathloss_exponent = 2.2;
    double reference_distance_m = 1.0;
    double sinr_threshold_db = 24.0;
    double false_alarm = 1e-6;
    TargetPriorConfig target;
    OptimizerSettings optimizer;
    std::uint64_t rng_seed = 1;

    int n_users() const { return static_cast<int>(users.size()); }
    double wavelength_m() const { return kSpeedOfLight / carrier_hz; }
    double total_power_w() const;
    double comm_noise_w() const;
    double sense_noise_w() const;
    double sinr_threshold_lin() const;
    /// Rayleigh scale of |alpha|: explicit value or radar-equation fallback.
    double alpha_scale() const;

    void validate() const;  // throws ConfigError
};

double dbm_to_watts(double p_dbm);
double watts_to_dbm(double p_w);
double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Transmit steering vector of a half-wavelength ULA, phase reference at
/// element 0: a_i = exp(j pi i sin(theta)), i = 0..n-1.
CVector steering_tx(double theta_rad, int n_tx);
/// Receive array shares the geometry convention.
CVector steering_rx(double theta_rad, int n_rx);

/// Sensing response F(theta) = N_r * a(theta) a(theta)^H (rank one, PSD,
/// trace N_t*N_r).
CMatrix target_f_matrix(double theta_rad, const SceneConfig& cfg);

/// Log-distance path loss in dB: -20*log10(lambda/(4 pi d0)) + 10 n log10(d/d0).
double path_loss_db(double distance_m, double wavelength_m, double exponent,
                    double reference_distance_m);

/// Rayleigh scale of the scattering magnitude from the radar range equation:
/// sigma = sqrt((2/pi) * lambda^2 rcs / ((4 pi)^3 d^4)).
double rayleigh_scale_from_rcs(double rcs, double range_m, double wavelength_m);

/// One Rician user channel h_k^H = sqrt(eta) (sqrt(kappa/(kappa+1)) a^H +
/// sqrt(1/(kappa+1)) g~) with g~ i.i.d. CN(0,1) and eta the linear path gain.
ChannelRow gen_channel(const SceneConfig& cfg, int user_index, std::mt19937_64& rng);

/// All user channels drawn in user order from one generator.
std::vector<ChannelRow> gen_channels(const SceneConfig& cfg, std::mt19937_64& rng);

/// Key/value configuration document. Unknown keys are rejected; values keep
/// SceneConfig units (degrees, dBm).
SceneConfig parse_config(std::istream& in);
SceneConfig load_config(const std::string& path);
std::string config_text(const SceneConfig& cfg);
std::string default_config_text();

}  // namespace isac
