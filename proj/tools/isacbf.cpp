// isacbf - experiment driver: optimization runs, scheme sweeps, beampatterns,
// Monte-Carlo detection studies. All commands emit data files (CSV/JSON) plus
// a run manifest; plotting is left to external tooling.

#include "isac/conic.hpp"
#include "isac/detector.hpp"
#include "isac/matrix_io.hpp"
#include "isac/optimizer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace isac;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kPartial = 1, kUsage = 2, kNumerical = 3 };

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    return buf;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed = -1;  // -1: keep the config's seed
    int jobs = 0;            // 0: hardware concurrency
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "scenario configuration file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config rng seed");
    cmd->add_option("--jobs", args.jobs, "worker threads for independent runs");
}

SceneConfig load_scene(const CommonArgs& args) {
    SceneConfig cfg = args.config_path.empty() ? SceneConfig{} : load_config(args.config_path);
    if (args.seed >= 0) cfg.rng_seed = static_cast<std::uint64_t>(args.seed);
    cfg.validate();
    return cfg;
}

int effective_jobs(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

struct Manifest {
    json j;
    std::string start = iso_now();
    std::vector<std::string> outputs;

    void finish(const fs::path& dir, const SceneConfig& cfg, const std::string& command,
                const std::string& status) {
        j["command"] = command;
        j["version"] = kVersion;
        j["seed"] = cfg.rng_seed;
        j["config"] = config_text(cfg);
        j["started"] = start;
        j["finished"] = iso_now();
        j["status"] = status;
        j["outputs"] = outputs;
        std::ofstream os(dir / "manifest.json");
        os << j.dump(2) << "\n";
    }
};

std::ofstream open_output(Manifest& m, const fs::path& dir, const std::string& name) {
    m.outputs.push_back(name);
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot open output file: " + (dir / name).string());
    os.precision(17);
    return os;
}

void write_trace_csv(std::ostream& os, const OptimizationTrace& trace) {
    os << "# isacbf trace v1\n";
    os << "iter,epd,surrogate,step,residual,status,elapsed_s\n";
    for (const auto& r : trace.records)
        os << r.iter << "," << r.epd << "," << r.surrogate << "," << r.step << ","
           << r.residual << "," << to_string(r.solver_status) << "," << r.elapsed_s << "\n";
}

struct SchemeResult {
    std::string scheme;
    std::string status;
    double epd = 0.0;
    bool have_bf = false;
    Beamformer bf;
};

// One optimization or baseline run; failures are captured, not propagated.
SchemeResult run_scheme(const std::string& scheme, const SceneConfig& cfg,
                        const std::vector<ChannelRow>& channels, const DiscretizedPrior& th,
                        const DiscretizedPrior& al) {
    SchemeResult res;
    res.scheme = scheme;
    try {
        if (scheme == "proposed") {
            auto [bf, trace] = sca_sdr(cfg, channels, th, al, cfg.optimizer);
            res.status = to_string(trace.status);
            res.epd = trace.final_epd;
            res.bf = bf;
            res.have_bf = trace.status == RunStatus::converged ||
                          trace.status == RunStatus::max_iterations ||
                          trace.status == RunStatus::stalled;
        } else {
            BaselineKind kind = BaselineKind::omni;
            if (scheme == "max_sinr_0deg") kind = BaselineKind::max_sinr_0deg;
            else if (scheme == "max_esinr") kind = BaselineKind::max_esinr;
            res.bf = baseline(kind, cfg, channels, th, al);
            res.epd = expected_pd(res.bf.covariance(), th, al, cfg);
            res.status = "optimal";
            res.have_bf = true;
        }
    } catch (const InfeasibleError&) {
        res.status = "infeasible";
    } catch (const std::exception& e) {
        res.status = std::string("failed: ") + e.what();
    }
    return res;
}

const std::vector<std::string> kSchemes = {"proposed", "max_sinr_0deg", "max_esinr", "omni"};

int cmd_optimize(const CommonArgs& args, int max_iters_override,
                 const std::string& dump_subproblem_path) {
    const SceneConfig cfg = load_scene(args);
    fs::create_directories(args.out_dir);
    Manifest manifest;

    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    const auto th = theta_prior(cfg);
    const auto al = alpha_prior(cfg);

    OptimizerSettings settings = cfg.optimizer;
    if (max_iters_override > 0) settings.max_iters = max_iters_override;

    try {
        if (!dump_subproblem_path.empty()) {
            const Beamformer w0 = initialize(cfg, channels, th, al);
            const Subproblem sp = assemble(w0.covariance(), th, al, channels, cfg);
            std::ofstream os(dump_subproblem_path);
            os.precision(17);
            dump_subproblem(sp, os);
        }

        auto [bf, trace] = sca_sdr(cfg, channels, th, al, settings);
        {
            auto os = open_output(manifest, args.out_dir, "trace.csv");
            write_trace_csv(os, trace);
        }
        {
            auto os = open_output(manifest, args.out_dir, "beamformer.txt");
            write_beamformer(os, bf);
        }
        const auto check = verify_beamformer(bf, channels, cfg);
        manifest.j["final_epd"] = trace.final_epd;
        manifest.j["iterations"] = trace.records.size();
        manifest.j["power_w"] = check.power_w;
        manifest.j["min_sinr_margin"] = check.min_sinr_margin;
        manifest.finish(args.out_dir, cfg, "optimize", to_string(trace.status));
        if (trace.status == RunStatus::numerical_failure) return kNumerical;
        if (trace.status == RunStatus::infeasible) return kPartial;
        return kOk;
    } catch (const InfeasibleError& e) {
        manifest.finish(args.out_dir, cfg, "optimize", std::string("infeasible: ") + e.what());
        std::cerr << "optimize: " << e.what() << "\n";
        return kPartial;
    }
}

int cmd_sweep(const CommonArgs& args, const std::string& axis, std::vector<double> values) {
    if (values.empty()) {
        std::cerr << "sweep: --values must be nonempty\n";
        return kUsage;
    }
    if (axis != "gamma_db" && axis != "power_dbm") {
        std::cerr << "sweep: --axis must be gamma_db or power_dbm\n";
        return kUsage;
    }
    const SceneConfig base = load_scene(args);
    fs::create_directories(args.out_dir);
    Manifest manifest;

    struct Task {
        double value;
        std::string scheme;
        SchemeResult result;
    };
    std::vector<Task> tasks;
    for (double v : values)
        for (const auto& s : kSchemes) tasks.push_back({v, s, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            SceneConfig cfg = base;
            if (axis == "gamma_db") cfg.sinr_threshold_db = tasks[i].value;
            else cfg.total_power_dbm = tasks[i].value;
            std::mt19937_64 rng(cfg.rng_seed);
            const auto channels = gen_channels(cfg, rng);
            const auto th = theta_prior(cfg);
            const auto al = alpha_prior(cfg);
            tasks[i].result = run_scheme(tasks[i].scheme, cfg, channels, th, al);
        }
    };
    const int jobs = std::min<int>(effective_jobs(args.jobs), static_cast<int>(tasks.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    int succeeded = 0;
    {
        auto os = open_output(manifest, args.out_dir, "sweep.csv");
        os << "# isacbf sweep v1 axis=" << axis << "\n";
        os << "axis_value,scheme,epd,status\n";
        for (const auto& t : tasks) {
            os << t.value << "," << t.scheme << "," << t.result.epd << "," << t.result.status
               << "\n";
            if (t.result.have_bf) ++succeeded;
        }
    }
    manifest.j["axis"] = axis;
    manifest.j["values"] = values;
    manifest.finish(args.out_dir, base, "sweep", succeeded ? "ok" : "all_points_failed");
    return succeeded ? kOk : kPartial;
}

int cmd_beampattern(const CommonArgs& args) {
    const SceneConfig cfg = load_scene(args);
    fs::create_directories(args.out_dir);
    Manifest manifest;

    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    const auto th = theta_prior(cfg);
    const auto al = alpha_prior(cfg);

    std::vector<double> grid;
    for (double d = -90.0; d <= 90.0 + 1e-9; d += 0.5) grid.push_back(deg_to_rad(d));

    bool any = false;
    auto os = open_output(manifest, args.out_dir, "beampattern.csv");
    os << "# isacbf beampattern v1 grid_deg=0.5\n";
    os << "angle_deg,scheme,power_w\n";
    std::string status = "ok";
    for (const auto& scheme : kSchemes) {
        const SchemeResult res = run_scheme(scheme, cfg, channels, th, al);
        if (!res.have_bf) {
            status = res.status;
            continue;
        }
        any = true;
        const auto pattern = beampattern(res.bf.covariance(), grid, cfg);
        for (std::size_t i = 0; i < grid.size(); ++i)
            os << rad_to_deg(grid[i]) << "," << scheme << "," << pattern[i] << "\n";
    }
    manifest.finish(args.out_dir, cfg, "beampattern", any ? "ok" : status);
    return any ? kOk : kPartial;
}

int cmd_montecarlo(const CommonArgs& args, long trials, int cells, int block_len, double pf) {
    const SceneConfig cfg = load_scene(args);
    fs::create_directories(args.out_dir);
    Manifest manifest;

    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    const auto th = theta_prior(cfg);
    const auto al = alpha_prior(cfg);

    MonteCarloOptions opts;
    opts.crosscheck_cells = cells;
    opts.block_len = block_len;
    opts.crosscheck_pf = pf;

    json report;
    bool any = false;
    for (const auto& scheme : kSchemes) {
        const SchemeResult res = run_scheme(scheme, cfg, channels, th, al);
        report["schemes"][scheme]["status"] = res.status;
        if (!res.have_bf) continue;
        any = true;
        // Same sampling seed for every scheme: identical prior draws.
        const MonteCarloResult mc = monte_carlo_pd(res.bf, cfg, trials, cfg.rng_seed, opts);
        auto os = open_output(manifest, args.out_dir, "histogram_" + scheme + ".csv");
        os << "# isacbf pd-histogram v1\n";
        os << "bin_left,bin_right,count\n";
        for (std::size_t b = 0; b + 1 < mc.bin_edges.size(); ++b)
            os << mc.bin_edges[b] << "," << mc.bin_edges[b + 1] << "," << mc.counts[b] << "\n";
        report["schemes"][scheme]["mean_pd"] = mc.mean_pd;
        report["schemes"][scheme]["epd_quadrature"] = res.epd;
        for (const auto& cell : mc.cells) {
            report["schemes"][scheme]["cells"].push_back(
                {{"alpha_abs", cell.alpha_abs},
                 {"theta_deg", rad_to_deg(cell.theta_rad)},
                 {"analytic_pd", cell.analytic_pd},
                 {"empirical_pd", cell.empirical_pd},
                 {"ci_halfwidth", cell.ci_halfwidth}});
        }
    }
    {
        auto os = open_output(manifest, args.out_dir, "montecarlo.json");
        os << report.dump(2) << "\n";
    }
    manifest.j["trials"] = trials;
    manifest.finish(args.out_dir, cfg, "montecarlo", any ? "ok" : "all_schemes_failed");
    return any ? kOk : kPartial;
}

int cmd_validate_pd(const CommonArgs& args, double pf, long trials, int block_len, int cells) {
    const SceneConfig cfg = load_scene(args);
    fs::create_directories(args.out_dir);
    Manifest manifest;

    std::mt19937_64 rng(cfg.rng_seed);
    const auto channels = gen_channels(cfg, rng);
    const auto th = theta_prior(cfg);
    const auto al = alpha_prior(cfg);

    json report;
    try {
        const SchemeResult res = run_scheme("proposed", cfg, channels, th, al);
        if (!res.have_bf) {
            manifest.finish(args.out_dir, cfg, "validate-pd", res.status);
            return res.status == "infeasible" ? kPartial : kNumerical;
        }
        MonteCarloOptions opts;
        opts.crosscheck_cells = cells;
        opts.crosscheck_reps = static_cast<int>(trials);
        opts.crosscheck_pf = pf;
        opts.block_len = block_len;
        const MonteCarloResult mc = monte_carlo_pd(
            res.bf, cfg, std::max(1l, static_cast<long>(cells)), cfg.rng_seed, opts);
        double max_err = 0.0;
        for (const auto& cell : mc.cells) {
            const double err = std::fabs(cell.analytic_pd - cell.empirical_pd);
            max_err = std::max(max_err, err);
            report["cells"].push_back({{"alpha_abs", cell.alpha_abs},
                                       {"theta_deg", rad_to_deg(cell.theta_rad)},
                                       {"analytic_pd", cell.analytic_pd},
                                       {"empirical_pd", cell.empirical_pd},
                                       {"ci_halfwidth", cell.ci_halfwidth},
                                       {"abs_error", err}});
        }
        // False-alarm calibration against the same beamformer.
        const double theta0 = deg_to_rad(cfg.target.theta_mean_deg);
        const double pfa = empirical_detection_rate(res.bf, 0.0, theta0, block_len, pf, trials,
                                                    split_seed(cfg.rng_seed, 42), cfg,
                                                    effective_jobs(args.jobs));
        report["pf_nominal"] = pf;
        report["pf_empirical"] = pfa;
        report["pf_relative_error"] = (pfa - pf) / pf;
        report["max_abs_error"] = max_err;
        report["trials"] = trials;
        report["block_len"] = block_len;
        {
            auto os = open_output(manifest, args.out_dir, "validate_pd.json");
            os << report.dump(2) << "\n";
        }
        manifest.finish(args.out_dir, cfg, "validate-pd", "ok");
        return kOk;
    } catch (const std::exception& e) {
        manifest.finish(args.out_dir, cfg, "validate-pd", std::string("failed: ") + e.what());
        std::cerr << "validate-pd: " << e.what() << "\n";
        return kNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian ISAC beamforming experiments"};
    app.require_subcommand(1);

    CommonArgs opt_args, sweep_args, beam_args, mc_args, val_args;
    int max_iters = 0;
    std::string dump_path;
    auto* opt = app.add_subcommand("optimize", "run the SCA-SDR optimizer, write trace");
    add_common(opt, opt_args);
    opt->add_option("--max-iters", max_iters, "override optimizer iteration cap");
    opt->add_option("--dump-subproblem", dump_path,
                    "write the initial-anchor subproblem in text form");

    std::string axis = "gamma_db";
    std::vector<double> values;
    auto* sweep = app.add_subcommand("sweep", "EP_d of all schemes along an axis");
    add_common(sweep, sweep_args);
    sweep->add_option("--axis", axis, "gamma_db or power_dbm");
    sweep->add_option("--values", values, "axis values")->delimiter(',');

    auto* beam = app.add_subcommand("beampattern", "transmit beampatterns of all schemes");
    add_common(beam, beam_args);

    long mc_trials = 1000;
    int mc_cells = 0, mc_block = 64;
    double mc_pf = 1e-2;
    auto* mc = app.add_subcommand("montecarlo", "prior-sampled detection histograms");
    add_common(mc, mc_args);
    mc->add_option("--trials", mc_trials, "prior samples");
    mc->add_option("--cells", mc_cells, "signal-level cross-check cells");
    mc->add_option("--block-len", mc_block, "sensing block length");
    mc->add_option("--pf", mc_pf, "false-alarm rate for cross-checks");

    double val_pf = 1e-2;
    long val_trials = 100000;
    int val_block = 64, val_cells = 9;
    auto* val = app.add_subcommand("validate-pd", "detector vs closed-form P_d report");
    add_common(val, val_args);
    val->add_option("--pf", val_pf, "false-alarm rate");
    val->add_option("--trials", val_trials, "signal-level trials per cell and for H0");
    val->add_option("--block-len", val_block, "sensing block length");
    val->add_option("--cells", val_cells, "prior cells to validate");

    std::string defaults_out;
    auto* dump = app.add_subcommand("dump-config-defaults", "print the default configuration");
    dump->add_option("--out", defaults_out, "write to file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (opt->parsed()) return cmd_optimize(opt_args, max_iters, dump_path);
        if (sweep->parsed()) return cmd_sweep(sweep_args, axis, values);
        if (beam->parsed()) return cmd_beampattern(beam_args);
        if (mc->parsed()) return cmd_montecarlo(mc_args, mc_trials, mc_cells, mc_block, mc_pf);
        if (val->parsed())
            return cmd_validate_pd(val_args, val_pf, val_trials, val_block, val_cells);
        if (dump->parsed()) {
            if (defaults_out.empty()) {
                std::cout << default_config_text();
            } else {
                std::ofstream os(defaults_out);
                if (!os) throw ConfigError("cannot open " + defaults_out);
                os << default_config_text();
            }
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
