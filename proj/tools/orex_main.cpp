// Command-line driver: solve / policy / simulate / validate / example5.
//
// Exit codes: 0 success, 2 configuration or model validation failure,
// 3 contraction precondition violation, 4 Monte Carlo dominance failure.
// The config file is the experiment; only --out overrides it.
// RHJB_THREADS caps the worker count (default: hardware concurrency).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orex/orex.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitContraction = 3;
constexpr int kExitDominance = 4;

struct LoadedRun {
    orex::RunConfig config;
    orex::ProblemSpec spec;
    orex::Grid grid;
    orex::QuadratureSet quad;
    orex::SolveOptions options;
};

// Parses and validates the config; on failure prints field-naming messages
// to stderr and returns the validation exit code through `error`.
std::optional<LoadedRun> load_run(const std::string& config_path,
                                  const std::optional<std::string>& out_override, int& error) {
    nlohmann::json doc;
    {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config file " << config_path << "\n";
            error = kExitValidation;
            return std::nullopt;
        }
        try {
            in >> doc;
        } catch (const std::exception& e) {
            std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
            error = kExitValidation;
            return std::nullopt;
        }
    }

    LoadedRun run;
    try {
        run.config = doc.get<orex::RunConfig>();
    } catch (const std::exception& e) {
        std::cerr << "error: config has wrong shape: " << e.what() << "\n";
        error = kExitValidation;
        return std::nullopt;
    }
    if (out_override) run.config.output_dir = *out_override;

    bool bad = false;
    for (const auto& message : orex::validate_config(run.config)) {
        std::cerr << "config error: " << message << "\n";
        bad = true;
    }
    if (!bad) {
        run.spec = orex::to_problem_spec(run.config.problem);
        auto report = orex::validate_problem(run.spec);
        for (const auto& v : report.violations) {
            std::cerr << "config error: " << v.field << ": " << v.message << "\n";
            bad = true;
        }
    }
    if (bad) {
        error = kExitValidation;
        return std::nullopt;
    }

    try {
        run.grid = orex::to_grid(run.config);
        run.quad = orex::build_quadrature(run.spec.levy, run.config.quadrature.spacing);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        error = kExitValidation;
        return std::nullopt;
    }
    run.options = orex::to_solve_options(run.config);
    return run;
}

std::filesystem::path prepare_output_dir(const LoadedRun& run) {
    std::filesystem::path dir(run.config.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Shared solve step; maps ContractionViolation onto its exit code.
std::optional<orex::SolveResult> run_solve(const LoadedRun& run, int& error,
                                           double* seconds = nullptr) {
    try {
        auto start = std::chrono::steady_clock::now();
        auto result = orex::solve(run.spec, run.grid, run.quad, run.options);
        auto finish = std::chrono::steady_clock::now();
        if (seconds != nullptr)
            *seconds = std::chrono::duration<double>(finish - start).count();
        return result;
    } catch (const orex::ContractionViolation& e) {
        std::cerr << "contraction violation: " << e.what() << "\n";
        error = kExitContraction;
        return std::nullopt;
    }
}

int cmd_solve(const LoadedRun& run) {
    int error = 0;
    double seconds = 0.0;
    auto result = run_solve(run, error, &seconds);
    if (!result) return error;

    auto dir = prepare_output_dir(run);
    {
        auto out = orex::detail::open_artifact((dir / "value.csv").string());
        orex::write_value_csv(out, result->value);
    }
    auto scheme = orex::check_scheme(run.spec, run.grid, run.quad, run.options);
    orex::write_json_file((dir / "report.json").string(),
                          orex::report_json(result->report, scheme, seconds));
    std::cout << "solved " << run.grid.time_steps << "x" << run.grid.price_steps << "x"
              << run.grid.reserve_steps << "x" << run.grid.regime_count << " grid in "
              << orex::fmt17(seconds) << " s; max contraction ratio "
              << orex::fmt17(result->report.max_ratio()) << "\n"
              << "wrote " << (dir / "value.csv").string() << ", "
              << (dir / "report.json").string() << "\n";
    return 0;
}

int cmd_policy(const LoadedRun& run) {
    int error = 0;
    auto result = run_solve(run, error);
    if (!result) return error;

    auto policy = orex::extract_policy(result->value, run.spec, run.quad, run.options);
    auto dir = prepare_output_dir(run);
    {
        auto out = orex::detail::open_artifact((dir / "policy.csv").string());
        orex::write_policy_csv(out, policy);
    }
    for (int ig = 0; ig < run.grid.regime_count; ++ig) {
        std::vector<orex::BoundaryCurve> curves;
        for (double s : run.config.slices.times)
            curves.push_back(orex::free_boundary(
                policy, {orex::BoundarySlice::Axis::time, s}, ig));
        for (double y : run.config.slices.reserves)
            curves.push_back(orex::free_boundary(
                policy, {orex::BoundarySlice::Axis::reserve, y}, ig));
        auto path = dir / ("boundary_" + std::to_string(ig + 1) + ".csv");
        auto out = orex::detail::open_artifact(path.string());
        orex::write_boundary_csv(out, curves);
    }
    std::cout << "wrote " << (dir / "policy.csv").string() << " and "
              << run.grid.regime_count << " boundary file(s)\n";
    return 0;
}

std::uint64_t point_seed(const orex::RunConfig& config, std::size_t point) {
    return orex::splitmix64(config.monte_carlo.seed + 0x51ED2701ULL * (point + 1));
}

int cmd_simulate(const LoadedRun& run) {
    int error = 0;
    auto result = run_solve(run, error);
    if (!result) return error;

    auto policy = orex::extract_policy(result->value, run.spec, run.quad, run.options);
    auto rule = orex::grid_policy_rule(policy);
    auto activity = orex::make_jump_activity(run.spec);
    const auto& mc = run.config.monte_carlo;

    std::vector<orex::ValueEstimate> estimates;
    for (std::size_t p = 0; p < mc.sample_points.size(); ++p) {
        const auto& pt = mc.sample_points[p];
        estimates.push_back(orex::estimate_value(run.spec, rule, pt.s, pt.x, pt.y, pt.regime,
                                                 mc.dt, mc.paths, point_seed(run.config, p),
                                                 &activity));
    }

    auto dir = prepare_output_dir(run);
    orex::write_json_file((dir / "simulation.json").string(),
                          orex::simulation_json(mc, estimates));
    std::vector<orex::PathSample> recorded;
    if (!mc.sample_points.empty()) {
        const auto& pt = mc.sample_points.front();
        for (int q = 0; q < mc.record_paths; ++q)
            recorded.push_back(orex::simulate_path(
                run.spec, rule, pt.s, pt.x, pt.y, pt.regime, mc.dt,
                orex::path_seed(point_seed(run.config, 0), static_cast<std::uint64_t>(q)),
                &activity));
    }
    {
        auto out = orex::detail::open_artifact((dir / "paths.csv").string());
        orex::write_paths_csv(out, recorded);
    }
    std::cout << "wrote " << (dir / "simulation.json").string() << " ("
              << estimates.size() << " point(s)) and " << (dir / "paths.csv").string() << " ("
              << recorded.size() << " path(s))\n";
    return 0;
}

int cmd_validate(const LoadedRun& run) {
    int error = 0;
    auto result = run_solve(run, error);
    if (!result) return error;

    auto policy = orex::extract_policy(result->value, run.spec, run.quad, run.options);
    auto rule = orex::grid_policy_rule(policy);
    auto activity = orex::make_jump_activity(run.spec);
    const auto& mc = run.config.monte_carlo;
    const orex::Grid& grid = run.grid;
    double discretization =
        mc.dt + grid.price_step + grid.reserve_step + grid.time_step;
    double allowance = 3.0; // stderr multiplier; the rest is C * discretization

    std::vector<orex::ValidationPoint> points;
    bool all_pass = true;
    for (std::size_t p = 0; p < mc.sample_points.size(); ++p) {
        const auto& pt = mc.sample_points[p];
        int n = std::clamp(static_cast<int>(std::lround(pt.s / grid.time_step)), 0,
                           grid.time_steps);
        int ix = std::clamp(static_cast<int>(std::lround(pt.x / grid.price_step)), 0,
                            grid.price_steps);
        int iy = std::clamp(static_cast<int>(std::lround(pt.y / grid.reserve_step)), 0,
                            grid.reserve_steps);
        orex::ValidationPoint row;
        row.point = pt;
        row.grid_value = result->value.at(n, ix, iy, pt.regime);
        auto est = orex::estimate_value(run.spec, rule, grid.s_value(n), grid.x_value(ix),
                                        grid.y_value(iy), pt.regime, mc.dt, mc.paths,
                                        point_seed(run.config, p), &activity);
        row.mc_mean = est.mean;
        row.mc_stderr = est.std_error;
        double tolerance =
            allowance * est.std_error + mc.allowance_constant * discretization;
        row.pass = std::abs(est.mean - row.grid_value) <= tolerance;
        all_pass = all_pass && row.pass;
        points.push_back(row);
    }

    auto dir = prepare_output_dir(run);
    orex::write_json_file(
        (dir / "validation.json").string(),
        orex::validation_json(points, mc.allowance_constant, discretization));
    std::cout << "wrote " << (dir / "validation.json").string() << "; "
              << (all_pass ? "all points pass" : "dominance check FAILED") << "\n";
    if (!all_pass) {
        std::cerr << "validation failed: Monte Carlo estimate outside the dominance "
                     "tolerance at one or more points\n";
        return kExitDominance;
    }
    return 0;
}

int cmd_example5(const std::string& outdir) {
    orex::RunConfig config = orex::example5_config();
    config.output_dir = outdir;
    std::filesystem::create_directories(outdir);
    auto config_path = std::filesystem::path(outdir) / "config.json";
    orex::write_json_file(config_path.string(), nlohmann::json(config));
    std::cout << "wrote " << config_path.string() << "\n";

    int error = 0;
    auto run = load_run(config_path.string(), std::nullopt, error);
    if (!run) return error;
    if (int rc = cmd_solve(*run); rc != 0) return rc;
    if (int rc = cmd_policy(*run); rc != 0) return rc;
    return cmd_validate(*run);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-horizon resource extraction under regime-switching jump-diffusion "
                 "prices: value function, extraction policy, stopping boundary, Monte Carlo "
                 "validation"};
    app.require_subcommand(1);
    argv = app.ensure_utf8(argv);

    std::string config_path;
    std::string outdir;
    std::optional<std::string> out_override;

    auto add_config_command = [&](const char* name, const char* help) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->add_option("config", config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out_override,
                        "override the config's output directory (the only override)");
        return cmd;
    };

    CLI::App* solve_cmd =
        add_config_command("solve", "solve the control problem; write value.csv, report.json");
    CLI::App* policy_cmd = add_config_command(
        "policy", "extract the optimal rate/stop policy; write policy.csv, boundary_<regime>.csv");
    CLI::App* simulate_cmd = add_config_command(
        "simulate", "simulate the extracted policy; write simulation.json, paths.csv");
    CLI::App* validate_cmd = add_config_command(
        "validate", "Monte Carlo cross-check of the grid value; write validation.json");
    CLI::App* example_cmd = app.add_subcommand(
        "example5", "write the built-in two-regime oil example config and run "
                    "solve + policy + validate");
    example_cmd->add_option("outdir", outdir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (example_cmd->parsed()) return cmd_example5(outdir);
        int error = 0;
        auto run = load_run(config_path, out_override, error);
        if (!run) return error;
        if (solve_cmd->parsed()) return cmd_solve(*run);
        if (policy_cmd->parsed()) return cmd_policy(*run);
        if (simulate_cmd->parsed()) return cmd_simulate(*run);
        if (validate_cmd->parsed()) return cmd_validate(*run);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
