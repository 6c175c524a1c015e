#include "isac/scene.hpp"

#include <cmath>

namespace isac {

double dbm_to_watts(double p_dbm) { return std::pow(10.0, (p_dbm - 30.0) / 10.0); }
double watts_to_dbm(double p_w) { return 10.0 * std::log10(p_w) + 30.0; }
double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

double SceneConfig::total_power_w() const { return dbm_to_watts(total_power_dbm); }
double SceneConfig::comm_noise_w() const { return dbm_to_watts(comm_noise_dbm); }
double SceneConfig::sense_noise_w() const { return dbm_to_watts(sense_noise_dbm); }
double SceneConfig::sinr_threshold_lin() const {
    return std::pow(10.0, sinr_threshold_db / 10.0);
}

double SceneConfig::alpha_scale() const {
    if (target.alpha_sigma > 0.0) return target.alpha_sigma;
    return rayleigh_scale_from_rcs(target.rcs, target.range_m, wavelength_m());
}

void OptimizerSettings::validate() const {
    if (max_iters < 1) throw ConfigError("optimizer: max_iters >= 1 required");
    if (!(tol > 0.0)) throw ConfigError("optimizer: tol > 0 required");
    if (!(armijo_beta > 0.0 && armijo_beta < 1.0))
        throw ConfigError("optimizer: armijo_beta in (0,1) required");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0))
        throw ConfigError("optimizer: armijo_c1 in (0,1) required");
    if (jitter < 0.0) throw ConfigError("optimizer: jitter >= 0 required");
    if (prox_weight < 0.0) throw ConfigError("optimizer: prox_weight >= 0 required");
}

void SceneConfig::validate() const {
    if (n_tx < 1 || n_rx < 1) throw ConfigError("scene: n_tx and n_rx must be >= 1");
    if (!(carrier_hz > 0.0)) throw ConfigError("scene: carrier_hz must be positive");
    if (!(reference_distance_m > 0.0))
        throw ConfigError("scene: reference_distance_m must be positive");
    for (const auto& u : users)
        if (!(u.distance_m > 0.0)) throw ConfigError("scene: user distance must be positive");
    if (!(false_alarm > 0.0 && false_alarm < 1.0))
        throw ConfigError("scene: false_alarm must lie in (0,1)");
    if (rician_kappa < 0.0) throw ConfigError("scene: rician_kappa must be >= 0");
    if (!std::isfinite(sinr_threshold_db)) throw ConfigError("scene: sinr_threshold_db not finite");
    if (target.grid_m < 1 || target.grid_n < 1)
        throw ConfigError("scene: prior grid sizes must be >= 1");
    if (target.theta_std_deg < 0.0) throw ConfigError("scene: theta_std_deg must be >= 0");
    if (!(alpha_scale() > 0.0)) throw ConfigError("scene: alpha prior scale must be positive");
    if (!(target.trunc_theta_sigmas > 0.0) || !(target.trunc_alpha_sigmas > 0.0))
        throw ConfigError("scene: prior truncation widths must be positive");
    optimizer.validate();
}

CVector steering_tx(double theta_rad, int n_tx) {
    CVector a(n_tx);
    const double s = std::sin(theta_rad);
    for (int i = 0; i < n_tx; ++i) {
        const double phase = M_PI * i * s;
        a(i) = Complex(std::cos(phase), std::sin(phase));
    }
    return a;
}

CVector steering_rx(double theta_rad, int n_rx) { return steering_tx(theta_rad, n_rx); }

CMatrix target_f_matrix(double theta_rad, const SceneConfig& cfg) {
    const CVector a = steering_tx(theta_rad, cfg.n_tx);
    return static_cast<double>(cfg.n_rx) * (a * a.adjoint());
}

double path_loss_db(double distance_m, double wavelength_m, double exponent,
                    double reference_distance_m) {
    return -20.0 * std::log10(wavelength_m / (4.0 * M_PI * reference_distance_m)) +
           10.0 * exponent * std::log10(distance_m / reference_distance_m);
}

double rayleigh_scale_from_rcs(double rcs, double range_m, double wavelength_m) {
    const double four_pi = 4.0 * M_PI;
    return std::sqrt((2.0 / M_PI) * wavelength_m * wavelength_m * rcs /
                     (four_pi * four_pi * four_pi * std::pow(range_m, 4.0)));
}

ChannelRow gen_channel(const SceneConfig& cfg, int user_index, std::mt19937_64& rng) {
    if (user_index < 0 || user_index >= cfg.n_users())
        throw std::invalid_argument("gen_channel: user_index out of range");
    const UserPlacement& u = cfg.users[user_index];
    const double pl_db = path_loss_db(u.distance_m, cfg.wavelength_m(), cfg.pathloss_exponent,
                                      cfg.reference_distance_m);
    const double eta = std::pow(10.0, -pl_db / 10.0);
    const double kappa = cfg.rician_kappa;
    const double w_los = std::sqrt(kappa / (kappa + 1.0));
    const double w_nlos = std::sqrt(1.0 / (kappa + 1.0));

    const CVector a = steering_tx(deg_to_rad(u.angle_deg), cfg.n_tx);
    std::normal_distribution<double> gauss(0.0, M_SQRT1_2);  // CN(0,1) component parts
    ChannelRow h(cfg.n_tx);
    for (int i = 0; i < cfg.n_tx; ++i) {
        const Complex g(gauss(rng), gauss(rng));
        h(i) = std::sqrt(eta) * (w_los * std::conj(a(i)) + w_nlos * g);
    }
    return h;
}

std::vector<ChannelRow> gen_channels(const SceneConfig& cfg, std::mt19937_64& rng) {
    std::vector<ChannelRow> channels;
    channels.reserve(cfg.users.size());
    for (int k = 0; k < cfg.n_users(); ++k) channels.push_back(gen_channel(cfg, k, rng));
    return channels;
}

}  // namespace isac
