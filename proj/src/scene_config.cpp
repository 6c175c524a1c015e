#include "isac/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace isac {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& value, const std::string& key, int line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size()) {
        std::ostringstream os;
        os << "config line " << line_no << ": bad numeric value '" << value << "' for key '"
           << key << "'";
        throw ConfigError(os.str());
    }
    return v;
}

}  // namespace

SceneConfig parse_config(std::istream& in) {
    SceneConfig cfg;
    std::string section = "scene";
    std::string line;
    int line_no = 0;
    bool users_reset = false;

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "scene" && section != "target" && section != "optimizer")
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" +
                                  section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");

        auto num = [&] { return parse_number(value, key, line_no); };

        if (section == "scene") {
            if (key == "n_tx") cfg.n_tx = static_cast<int>(num());
            else if (key == "n_rx") cfg.n_rx = static_cast<int>(num());
            else if (key == "carrier_hz") cfg.carrier_hz = num();
            else if (key == "total_power_dbm") cfg.total_power_dbm = num();
            else if (key == "comm_noise_dbm") cfg.comm_noise_dbm = num();
            else if (key == "sense_noise_dbm") cfg.sense_noise_dbm = num();
            else if (key == "rician_kappa") cfg.rician_kappa = num();
            else if (key == "pathloss_exponent") cfg.pathloss_exponent = num();
            else if (key == "reference_distance_m") cfg.reference_distance_m = num();
            else if (key == "sinr_threshold_db") cfg.sinr_threshold_db = num();
            else if (key == "false_alarm") cfg.false_alarm = num();
            else if (key == "rng_seed") cfg.rng_seed = static_cast<std::uint64_t>(num());
            else if (key == "user") {
                std::istringstream us(value);
                UserPlacement u;
                if (!(us >> u.angle_deg >> u.distance_m))
                    throw ConfigError("config line " + std::to_string(line_no) +
                                      ": user expects 'angle_deg distance_m'");
                std::string rest;
                if (us >> rest)
                    throw ConfigError("config line " + std::to_string(line_no) +
                                      ": trailing content after user entry");
                if (!users_reset) {
                    cfg.users.clear();
                    users_reset = true;
                }
                cfg.users.push_back(u);
            } else if (key == "no_users") {
                if (num() != 0.0) {
                    cfg.users.clear();
                    users_reset = true;
                }
            } else {
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "' in [scene]");
            }
        } else if (section == "target") {
            if (key == "theta_mean_deg") cfg.target.theta_mean_deg = num();
            else if (key == "theta_std_deg") cfg.target.theta_std_deg = num();
            else if (key == "alpha_sigma") cfg.target.alpha_sigma = num();
            else if (key == "rcs") cfg.target.rcs = num();
            else if (key == "range_m") cfg.target.range_m = num();
            else if (key == "grid_m") cfg.target.grid_m = static_cast<int>(num());
            else if (key == "grid_n") cfg.target.grid_n = static_cast<int>(num());
            else if (key == "trunc_theta_sigmas") cfg.target.trunc_theta_sigmas = num();
            else if (key == "trunc_alpha_sigmas") cfg.target.trunc_alpha_sigmas = num();
            else
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "' in [target]");
        } else {  // optimizer
            if (key == "max_iters") cfg.optimizer.max_iters = static_cast<int>(num());
            else if (key == "tol") cfg.optimizer.tol = num();
            else if (key == "armijo_beta") cfg.optimizer.armijo_beta = num();
            else if (key == "armijo_c1") cfg.optimizer.armijo_c1 = num();
            else if (key == "jitter") cfg.optimizer.jitter = num();
            else if (key == "prox_weight") cfg.optimizer.prox_weight = num();
            else
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "' in [optimizer]");
        }
    }

    cfg.validate();
    return cfg;
}

SceneConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

std::string config_text(const SceneConfig& d) {
    std::ostringstream os;
    os.precision(17);
    os << "# isacbf scenario configuration\n";
    os << "[scene]\n";
    os << "n_tx = " << d.n_tx << "\n";
    os << "n_rx = " << d.n_rx << "\n";
    os << "carrier_hz = " << d.carrier_hz << "\n";
    os << "total_power_dbm = " << d.total_power_dbm << "\n";
    os << "comm_noise_dbm = " << d.comm_noise_dbm << "\n";
    os << "sense_noise_dbm = " << d.sense_noise_dbm << "\n";
    os << "rician_kappa = " << d.rician_kappa << "\n";
    os << "pathloss_exponent = " << d.pathloss_exponent << "\n";
    os << "reference_distance_m = " << d.reference_distance_m << "\n";
    os << "sinr_threshold_db = " << d.sinr_threshold_db << "\n";
    os << "false_alarm = " << d.false_alarm << "\n";
    os << "rng_seed = " << d.rng_seed << "\n";
    for (const auto& u : d.users) os << "user = " << u.angle_deg << " " << u.distance_m << "\n";
    os << "\n[target]\n";
    os << "theta_mean_deg = " << d.target.theta_mean_deg << "\n";
    os << "theta_std_deg = " << d.target.theta_std_deg << "\n";
    os << "alpha_sigma = " << d.target.alpha_sigma << "  # 0 derives the scale from rcs/range_m\n";
    os << "rcs = " << d.target.rcs << "\n";
    os << "range_m = " << d.target.range_m << "\n";
    os << "grid_m = " << d.target.grid_m << "\n";
    os << "grid_n = " << d.target.grid_n << "\n";
    os << "trunc_theta_sigmas = " << d.target.trunc_theta_sigmas << "\n";
    os << "trunc_alpha_sigmas = " << d.target.trunc_alpha_sigmas << "\n";
    os << "\n[optimizer]\n";
    os << "max_iters = " << d.optimizer.max_iters << "\n";
    os << "tol = " << d.optimizer.tol << "\n";
    os << "armijo_beta = " << d.optimizer.armijo_beta << "\n";
    os << "armijo_c1 = " << d.optimizer.armijo_c1 << "\n";
    os << "jitter = " << d.optimizer.jitter << "\n";
    os << "prox_weight = " << d.optimizer.prox_weight << "\n";
    return os.str();
}

std::string default_config_text() { return config_text(SceneConfig{}); }

}  // namespace isac
