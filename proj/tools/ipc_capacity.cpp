// Command-line front end: run experiments, fit asymptotes, compare against
// the thresholded empirical IPC, and run the reference checks.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ipc/config.hpp"
#include "ipc/mc_harness.hpp"
#include "ipc/report.hpp"
#include "ipc/verify.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

/// --threads wins, then IPC_LIMIT_THREADS, then the config value.
unsigned pick_threads(std::optional<unsigned> flag, unsigned configured)
{
    if (flag)
        return *flag;
    if (const char* env = std::getenv("IPC_LIMIT_THREADS")) {
        try {
            return static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring malformed IPC_LIMIT_THREADS='" << env << "'\n";
        }
    }
    return configured;
}

nlohmann::json plan_json(const ipc::ExperimentPlan& p)
{
    nlohmann::json j;
    j["task"] = p.task.name();
    if (p.task.kind == ipc::TaskKind::legendre) {
        auto terms = nlohmann::json::array();
        for (const auto& t : p.task.legendre.terms)
            terms.push_back({{"delay", t.delay}, {"degree", t.degree}});
        j["legendre_terms"] = terms;
    }
    if (p.task.kind == ipc::TaskKind::narma10)
        j["narma"] = {{"alpha", p.task.narma.alpha},
                      {"beta", p.task.narma.beta},
                      {"gamma", p.task.narma.gamma},
                      {"delta", p.task.narma.delta},
                      {"warmup", p.task.narma_warmup}};
    if (p.uses_esn())
        j["reservoir"] = {{"nodes", p.reservoir.nodes},
                          {"spectral_radius", p.reservoir.spectral_radius},
                          {"density", p.reservoir.density},
                          {"input_scale", p.reservoir.input_scale},
                          {"bias", p.reservoir.bias},
                          {"fixed", p.fix_reservoir}};
    j["lengths"] = p.t_grid;
    j["ratio"] = std::to_string(p.ratio_num) + "/" + std::to_string(p.ratio_den);
    j["trials"] = p.trials;
    j["washout"] = p.effective_washout();
    j["threshold_dof"] = p.threshold_dof();
    return j;
}

int cmd_run(const std::string& config_path, const std::string& preset_name, bool full_scale,
            const std::string& out, std::optional<unsigned> threads, std::optional<std::uint64_t> seed)
{
    ipc::RunConfig cfg;
    try {
        if (!config_path.empty() && !preset_name.empty())
            throw ipc::ConfigError("use either --config or --preset, not both");
        if (!config_path.empty())
            cfg = ipc::load_config(config_path);
        else if (!preset_name.empty())
            cfg = ipc::preset(preset_name, full_scale);
        else
            throw ipc::ConfigError("run needs --config PATH or --preset NAME");
        if (!out.empty())
            cfg.out_dir = out;
        if (seed) {
            cfg.plan.base_seed = *seed;
            cfg.plan.reservoir.seed = *seed;
        }
        cfg.plan.threads = pick_threads(threads, cfg.plan.threads);
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        const ipc::ExperimentResult result = ipc::run_experiment(cfg.plan);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::filesystem::create_directories(cfg.out_dir);
        ipc::write_results_csv(cfg.out_dir / "results.csv", result.rows);

        ipc::RunConfig effective = cfg;
        effective.plan.threads = 0; // thread count never changes results
        std::ofstream(cfg.out_dir / "config.ini") << ipc::serialize_config(effective);

        nlohmann::json manifest;
        manifest["code_version"] = IPC_VERSION;
        manifest["plan"] = plan_json(cfg.plan);
        manifest["base_seed"] = cfg.plan.base_seed;
        manifest["threads"] = ipc::resolve_thread_count(cfg.plan.threads);
        manifest["p_value"] = cfg.p_value;
        manifest["wall_time_seconds"] = wall;
        std::uint64_t failures = 0;
        for (const auto& r : result.rows)
            failures += r.failures;
        manifest["failed_trials"] = failures;
        std::ofstream(cfg.out_dir / "manifest.json") << manifest.dump(2) << '\n';

        std::cout << "wrote " << (cfg.out_dir / "results.csv").string() << " (" << result.rows.size()
                  << " rows, " << wall << " s)\n";
        if (failures > 0)
            std::cerr << "warning: " << failures << " trial(s) diverged and were excluded\n";
        return exit_ok;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

int cmd_fit(const std::string& csv, const std::string& out, double a_tol, double slope_tol, bool no_script)
{
    std::vector<ipc::SummaryRow> rows;
    try {
        rows = ipc::read_results_csv(csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    try {
        const ipc::FitReport report = ipc::analyze(rows, a_tol, slope_tol);
        const std::filesystem::path dir = out.empty() ? std::filesystem::path(csv).parent_path() / "fit" : std::filesystem::path(out);
        std::filesystem::create_directories(dir);
        const nlohmann::json j = ipc::to_json(report);
        std::ofstream(dir / "fit.json") << j.dump(2) << '\n';
        ipc::write_plot_data(dir, rows, report, !no_script);
        std::cout << j.dump(2) << '\n';
        for (const auto& d : report.dropped)
            std::cerr << "note: dropped " << (d.train ? "training" : "test") << " point at length " << d.length
                      << " from the log-log mean plot (deviation " << d.deviation << ")\n";
        if (report.slope.excluded > 0)
            std::cerr << "warning: " << report.slope.excluded << " nonpositive variance(s) excluded from the slope fit\n";
        return exit_ok;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

int cmd_baseline(const std::string& csv, unsigned dof, double p)
{
    try {
        const auto rows = ipc::read_results_csv(csv);
        const ipc::BaselineReport b = ipc::baseline(rows, dof, p);
        std::cout << "length              " << b.length << '\n'
                  << "chi-square dof      " << b.dof << '\n'
                  << "p                   " << b.p_value << '\n'
                  << "threshold           " << b.threshold << '\n'
                  << "training mean       " << b.training_mean << '\n'
                  << "empirical IPC       " << b.empirical << '\n';
        if (b.has_fit)
            std::cout << "extrapolated a      " << b.fitted_a << '\n';
        return exit_ok;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

int cmd_verify(bool quick, std::optional<unsigned> threads, const std::string& out)
{
    ipc::VerifyOptions options;
    options.quick = quick;
    options.threads = pick_threads(threads, 0);
    if (!out.empty())
        options.out_dir = out;
    options.on_result = [](const ipc::CheckResult& r) { std::cout << ipc::format_check(r) << std::endl; };
    const auto results = ipc::run_verify(options);
    std::size_t failed = 0;
    for (const auto& r : results)
        failed += r.passed ? 0 : 1;
    std::cout << (results.size() - failed) << "/" << results.size() << " checks passed\n";
    return failed == 0 ? exit_ok : exit_failure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Estimate the infinite-length information processing capacity of reservoirs"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out, csv;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    bool full_scale = false, quick = false, no_script = false;
    double a_tol = ipc::default_zero_a_tol, slope_tol = ipc::default_zero_slope_tol, p_value = 1e-4;
    unsigned dof = 1;

    auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment and write results.csv + manifest.json");
    run->add_option("--config", config_path, "INI configuration file");
    run->add_option("--preset", preset_name, "simple-verify | legendre1 | legendre15 | narma10");
    run->add_option("--out", out, "Output directory (overrides the config)");
    run->add_option("--threads", threads, "Worker threads (0 = all cores)");
    run->add_option("--seed", seed, "Base seed (overrides the config)");
    run->add_flag("--full-scale", full_scale, "Use full-size preset parameters");

    auto* fit = app.add_subcommand("fit", "Fit asymptotes to a results CSV");
    fit->add_option("csv", csv, "results.csv from `run`")->required();
    fit->add_option("--out", out, "Directory for fit.json and plot data (default: <csv dir>/fit)");
    fit->add_option("--a-tol", a_tol, "Zero-IPC tolerance on |a|");
    fit->add_option("--slope-tol", slope_tol, "Zero-IPC margin below a -1 variance power");
    fit->add_flag("--no-plot-script", no_script, "Skip plots.gp");

    auto* base = app.add_subcommand("baseline", "Thresholded empirical IPC at the largest T");
    base->add_option("csv", csv, "results.csv from `run`")->required();
    base->add_option("--dof", dof, "Chi-square degrees of freedom (reservoir nodes, or 1 for the simple model)");
    base->add_option("--p", p_value, "Tail probability of the threshold");

    auto* verify = app.add_subcommand("verify", "Run the reference checks");
    verify->add_flag("--quick", quick, "Skip the ESN-scale experiments");
    verify->add_option("--threads", threads, "Worker threads (0 = all cores)");
    verify->add_option("--out", out, "Directory for the experiment CSVs");

    auto* show = app.add_subcommand("show-config", "Print a preset as an editable INI file");
    show->add_option("--preset", preset_name, "Preset name")->required();
    show->add_flag("--full-scale", full_scale, "Use full-size parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    if (*run)
        return cmd_run(config_path, preset_name, full_scale, out, threads, seed);
    if (*fit)
        return cmd_fit(csv, out, a_tol, slope_tol, no_script);
    if (*base)
        return cmd_baseline(csv, dof, p_value);
    if (*verify)
        return cmd_verify(quick, threads, out);
    if (*show) {
        try {
            std::cout << ipc::serialize_config(ipc::preset(preset_name, full_scale));
            return exit_ok;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_usage;
        }
    }
    return exit_usage;
}
