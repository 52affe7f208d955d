#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "orex/grid.hpp"
#include "orex/model.hpp"
#include "orex/solver.hpp"

namespace orex {

// ============================================================================
// Declarative run configuration: one JSON document describes the problem,
// grid, quadrature, solver, Monte Carlo block and requested outputs.  The
// config is the experiment; everything round-trips losslessly.  Regimes are
// 1-indexed in files and 0-indexed in memory.
// ============================================================================

struct RegimeConfig {
    int count = 1;
    std::vector<std::vector<double>> q; // count x count transition rates
};

struct CoefficientConfig {
    std::string family = "exponential"; // "exponential" | "price_impact"
    std::vector<double> drift;
    std::vector<double> volatility;
    std::vector<double> jump_scale;
    double impact = 0.0; // price_impact only
};

struct PayoffConfig {
    std::string family = "mining_linear";
    double extraction_cost = 0.0;
    double fixed_cost = 0.0;
    double salvage_strike = 0.0;
};

struct LevyConfig {
    std::string kind = "none"; // "none" | "uniform" | "triangular" | "table"
    double support_radius = 1.0;
    double mass = 0.0;                              // uniform / triangular
    std::vector<std::pair<double, double>> points;  // table
    std::optional<double> declared_mass;            // table override
};

struct ProblemConfig {
    double discount_rate = 0.0;
    double horizon = 0.0;
    double max_rate = 0.0;
    RegimeConfig regimes;
    CoefficientConfig coefficients;
    PayoffConfig payoff;
    LevyConfig levy;
};

struct GridConfig {
    int time_steps = 0;
    int price_steps = 0;
    int reserve_steps = 0;
    double price_max = 0.0;
    double reserve_max = 0.0;
};

struct QuadratureConfig {
    double spacing = 0.05;
};

struct SolverConfig {
    double tolerance = 1e-8;
    int max_iterations = 20000;
    int control_samples = 8;
};

struct SamplePoint {
    double s = 0.0;
    double x = 0.0;
    double y = 0.0;
    int regime = 0; // 0-indexed here; 1-indexed in files
};

struct MonteCarloConfig {
    double dt = 0.05;
    long paths = 10000;
    std::uint64_t seed = 90210;
    int record_paths = 3;
    double allowance_constant = 25.0; // C in 3*stderr + C*(dt+h+l+k)
    std::vector<SamplePoint> sample_points;
};

struct SliceRequests {
    std::vector<double> times;    // fixed-s boundary slices
    std::vector<double> reserves; // fixed-y boundary slices
};

struct RunConfig {
    std::string output_dir = ".";
    ProblemConfig problem;
    GridConfig grid;
    QuadratureConfig quadrature;
    SolverConfig solver;
    MonteCarloConfig monte_carlo;
    SliceRequests slices;
};

// ----------------------------------------------------------------------------
// JSON mapping (nlohmann).  from_json accepts missing optional blocks and
// fills defaults; to_json always writes the full document.
// ----------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const RegimeConfig& c) {
    j = {{"count", c.count}, {"q", c.q}};
}
inline void from_json(const nlohmann::json& j, RegimeConfig& c) {
    c.count = j.value("count", 1);
    c.q = j.value("q", std::vector<std::vector<double>>{});
}

inline void to_json(nlohmann::json& j, const CoefficientConfig& c) {
    j = {{"family", c.family},
         {"drift", c.drift},
         {"volatility", c.volatility},
         {"jump_scale", c.jump_scale},
         {"impact", c.impact}};
}
inline void from_json(const nlohmann::json& j, CoefficientConfig& c) {
    c.family = j.value("family", std::string("exponential"));
    c.drift = j.value("drift", std::vector<double>{});
    c.volatility = j.value("volatility", std::vector<double>{});
    c.jump_scale = j.value("jump_scale", std::vector<double>{});
    c.impact = j.value("impact", 0.0);
}

inline void to_json(nlohmann::json& j, const PayoffConfig& c) {
    j = {{"family", c.family},
         {"extraction_cost", c.extraction_cost},
         {"fixed_cost", c.fixed_cost},
         {"salvage_strike", c.salvage_strike}};
}
inline void from_json(const nlohmann::json& j, PayoffConfig& c) {
    c.family = j.value("family", std::string("mining_linear"));
    c.extraction_cost = j.value("extraction_cost", 0.0);
    c.fixed_cost = j.value("fixed_cost", 0.0);
    c.salvage_strike = j.value("salvage_strike", 0.0);
}

inline void to_json(nlohmann::json& j, const LevyConfig& c) {
    j = {{"kind", c.kind},
         {"support_radius", c.support_radius},
         {"mass", c.mass},
         {"points", c.points}};
    if (c.declared_mass) j["declared_mass"] = *c.declared_mass;
}
inline void from_json(const nlohmann::json& j, LevyConfig& c) {
    c.kind = j.value("kind", std::string("none"));
    c.support_radius = j.value("support_radius", 1.0);
    c.mass = j.value("mass", 0.0);
    c.points = j.value("points", std::vector<std::pair<double, double>>{});
    if (j.contains("declared_mass")) c.declared_mass = j.at("declared_mass").get<double>();
}

inline void to_json(nlohmann::json& j, const ProblemConfig& c) {
    j = {{"discount_rate", c.discount_rate}, {"horizon", c.horizon}, {"max_rate", c.max_rate},
         {"regimes", c.regimes},             {"coefficients", c.coefficients},
         {"payoff", c.payoff},               {"levy", c.levy}};
}
inline void from_json(const nlohmann::json& j, ProblemConfig& c) {
    c.discount_rate = j.value("discount_rate", 0.0);
    c.horizon = j.value("horizon", 0.0);
    c.max_rate = j.value("max_rate", 0.0);
    if (j.contains("regimes")) c.regimes = j.at("regimes").get<RegimeConfig>();
    if (j.contains("coefficients")) c.coefficients = j.at("coefficients").get<CoefficientConfig>();
    if (j.contains("payoff")) c.payoff = j.at("payoff").get<PayoffConfig>();
    if (j.contains("levy")) c.levy = j.at("levy").get<LevyConfig>();
}

inline void to_json(nlohmann::json& j, const GridConfig& c) {
    j = {{"time_steps", c.time_steps},
         {"price_steps", c.price_steps},
         {"reserve_steps", c.reserve_steps},
         {"price_max", c.price_max},
         {"reserve_max", c.reserve_max}};
}
inline void from_json(const nlohmann::json& j, GridConfig& c) {
    c.time_steps = j.value("time_steps", 0);
    c.price_steps = j.value("price_steps", 0);
    c.reserve_steps = j.value("reserve_steps", 0);
    c.price_max = j.value("price_max", 0.0);
    c.reserve_max = j.value("reserve_max", 0.0);
}

inline void to_json(nlohmann::json& j, const QuadratureConfig& c) { j = {{"spacing", c.spacing}}; }
inline void from_json(const nlohmann::json& j, QuadratureConfig& c) {
    c.spacing = j.value("spacing", 0.05);
}

inline void to_json(nlohmann::json& j, const SolverConfig& c) {
    j = {{"tolerance", c.tolerance},
         {"max_iterations", c.max_iterations},
         {"control_samples", c.control_samples}};
}
inline void from_json(const nlohmann::json& j, SolverConfig& c) {
    c.tolerance = j.value("tolerance", 1e-8);
    c.max_iterations = j.value("max_iterations", 20000);
    c.control_samples = j.value("control_samples", 8);
}

inline void to_json(nlohmann::json& j, const SamplePoint& p) {
    j = {{"s", p.s}, {"x", p.x}, {"y", p.y}, {"regime", p.regime + 1}};
}
inline void from_json(const nlohmann::json& j, SamplePoint& p) {
    p.s = j.value("s", 0.0);
    p.x = j.value("x", 0.0);
    p.y = j.value("y", 0.0);
    p.regime = j.value("regime", 1) - 1;
}

inline void to_json(nlohmann::json& j, const MonteCarloConfig& c) {
    j = {{"dt", c.dt},
         {"paths", c.paths},
         {"seed", c.seed},
         {"record_paths", c.record_paths},
         {"allowance_constant", c.allowance_constant},
         {"sample_points", c.sample_points}};
}
inline void from_json(const nlohmann::json& j, MonteCarloConfig& c) {
    c.dt = j.value("dt", 0.05);
    c.paths = j.value("paths", 10000L);
    c.seed = j.value("seed", std::uint64_t{90210});
    c.record_paths = j.value("record_paths", 3);
    c.allowance_constant = j.value("allowance_constant", 25.0);
    c.sample_points = j.value("sample_points", std::vector<SamplePoint>{});
}

inline void to_json(nlohmann::json& j, const SliceRequests& c) {
    j = {{"times", c.times}, {"reserves", c.reserves}};
}
inline void from_json(const nlohmann::json& j, SliceRequests& c) {
    c.times = j.value("times", std::vector<double>{});
    c.reserves = j.value("reserves", std::vector<double>{});
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = {{"output_dir", c.output_dir}, {"problem", c.problem},
         {"grid", c.grid},             {"quadrature", c.quadrature},
         {"solver", c.solver},         {"monte_carlo", c.monte_carlo},
         {"slices", c.slices}};
}
inline void from_json(const nlohmann::json& j, RunConfig& c) {
    c.output_dir = j.value("output_dir", std::string("."));
    if (j.contains("problem")) c.problem = j.at("problem").get<ProblemConfig>();
    if (j.contains("grid")) c.grid = j.at("grid").get<GridConfig>();
    if (j.contains("quadrature")) c.quadrature = j.at("quadrature").get<QuadratureConfig>();
    if (j.contains("solver")) c.solver = j.at("solver").get<SolverConfig>();
    if (j.contains("monte_carlo")) c.monte_carlo = j.at("monte_carlo").get<MonteCarloConfig>();
    if (j.contains("slices")) c.slices = j.at("slices").get<SliceRequests>();
}

// ----------------------------------------------------------------------------
// Materialisation.
// ----------------------------------------------------------------------------

// Config-level checks that precede validate_problem: families must be
// known and the grid/solver/MC blocks well-formed.  Returns messages that
// name the offending field.
[[nodiscard]] inline std::vector<std::string> validate_config(const RunConfig& config) {
    std::vector<std::string> errors;
    auto flag = [&](const std::string& field, const std::string& what) {
        errors.push_back(field + ": " + what);
    };

    const auto& cf = config.problem.coefficients.family;
    if (cf != "exponential" && cf != "price_impact")
        flag("problem.coefficients.family", "unknown family '" + cf + "'");
    const auto& pf = config.problem.payoff.family;
    if (pf != "mining_linear") flag("problem.payoff.family", "unknown family '" + pf + "'");
    const auto& lk = config.problem.levy.kind;
    if (lk != "none" && lk != "uniform" && lk != "triangular" && lk != "table")
        flag("problem.levy.kind", "unknown kind '" + lk + "'");
    if ((lk == "uniform" || lk == "triangular") && !(config.problem.levy.mass >= 0.0))
        flag("problem.levy.mass", "must be nonnegative");
    if (lk == "table" && config.problem.levy.points.size() < 2)
        flag("problem.levy.points", "table density needs at least 2 points");

    if (config.grid.time_steps <= 0) flag("grid.time_steps", "must be positive");
    if (config.grid.price_steps <= 0) flag("grid.price_steps", "must be positive");
    if (config.grid.reserve_steps <= 0) flag("grid.reserve_steps", "must be positive");
    if (!(config.grid.price_max > 0.0)) flag("grid.price_max", "must be positive");
    if (!(config.grid.reserve_max > 0.0)) flag("grid.reserve_max", "must be positive");
    if (!(config.quadrature.spacing > 0.0)) flag("quadrature.spacing", "must be positive");
    if (!(config.solver.tolerance > 0.0)) flag("solver.tolerance", "must be positive");
    if (config.solver.max_iterations <= 0) flag("solver.max_iterations", "must be positive");
    if (config.solver.control_samples < 1) flag("solver.control_samples", "must be >= 1");

    if (!(config.monte_carlo.dt > 0.0)) flag("monte_carlo.dt", "must be positive");
    if (config.monte_carlo.paths < 2) flag("monte_carlo.paths", "need at least 2 paths");
    if (config.monte_carlo.record_paths < 0) flag("monte_carlo.record_paths", "must be >= 0");
    for (std::size_t p = 0; p < config.monte_carlo.sample_points.size(); ++p) {
        const auto& pt = config.monte_carlo.sample_points[p];
        std::string where = "monte_carlo.sample_points[" + std::to_string(p) + "]";
        if (pt.regime < 0 || pt.regime >= config.problem.regimes.count)
            flag(where + ".regime", "regime label out of range");
        if (!(pt.s >= 0.0) || !(pt.s <= config.problem.horizon))
            flag(where + ".s", "outside [0, horizon]");
        if (!(pt.x >= 0.0) || !(pt.x <= config.grid.price_max))
            flag(where + ".x", "outside [0, price_max]");
        if (!(pt.y >= 0.0) || !(pt.y <= config.grid.reserve_max))
            flag(where + ".y", "outside [0, reserve_max]");
    }
    return errors;
}

[[nodiscard]] inline ProblemSpec to_problem_spec(const ProblemConfig& config) {
    ProblemSpec spec;
    spec.discount_rate = config.discount_rate;
    spec.horizon = config.horizon;
    spec.max_rate = config.max_rate;

    spec.regimes.count = config.regimes.count;
    spec.regimes.rates.assign(
        static_cast<std::size_t>(config.regimes.count) * config.regimes.count, 0.0);
    for (std::size_t i = 0; i < config.regimes.q.size(); ++i)
        for (std::size_t g = 0; g < config.regimes.q[i].size(); ++g)
            if (i < static_cast<std::size_t>(config.regimes.count) &&
                g < static_cast<std::size_t>(config.regimes.count))
                spec.regimes.rates[i * config.regimes.count + g] = config.regimes.q[i][g];

    ExponentialLevyCoefficients base{config.coefficients.drift, config.coefficients.volatility,
                                     config.coefficients.jump_scale};
    if (config.coefficients.family == "price_impact")
        spec.coefficients = LargeProducerCoefficients{std::move(base), config.coefficients.impact};
    else
        spec.coefficients = std::move(base);

    spec.payoff = MiningLinearPayoff{config.payoff.extraction_cost, config.payoff.fixed_cost,
                                     config.payoff.salvage_strike};

    if (config.levy.kind == "uniform")
        spec.levy = uniform_levy_measure(config.levy.support_radius, config.levy.mass);
    else if (config.levy.kind == "triangular")
        spec.levy = triangular_levy_measure(config.levy.support_radius, config.levy.mass);
    else if (config.levy.kind == "table")
        spec.levy = table_levy_measure(config.levy.points);
    else
        spec.levy = zero_levy_measure();
    if (config.levy.declared_mass) spec.levy.declared_mass = config.levy.declared_mass;
    return spec;
}

[[nodiscard]] inline Grid to_grid(const RunConfig& config) {
    return Grid::make(config.grid.time_steps, config.grid.price_steps, config.grid.reserve_steps,
                      config.problem.regimes.count, config.problem.horizon,
                      config.grid.price_max, config.grid.reserve_max);
}

[[nodiscard]] inline SolveOptions to_solve_options(const RunConfig& config) {
    return {config.solver.tolerance, config.solver.max_iterations,
            config.solver.control_samples};
}

// The built-in two-regime oil-extraction example: 10-year contract,
// 10-billion-barrel reserve, uptrend/downtrend market, unit-mass uniform
// jump marks on [-1, 1].
[[nodiscard]] inline RunConfig example5_config() {
    RunConfig config;
    config.output_dir = ".";

    config.problem.discount_rate = 0.005;
    config.problem.horizon = 10.0;
    config.problem.max_rate = 5000.0;
    config.problem.regimes.count = 2;
    config.problem.regimes.q = {{-0.003, 0.003}, {0.005, -0.005}};
    config.problem.coefficients.family = "price_impact";
    config.problem.coefficients.drift = {0.01, -0.01};
    config.problem.coefficients.volatility = {0.3, 0.2};
    config.problem.coefficients.jump_scale = {0.25, 0.3};
    config.problem.coefficients.impact = 0.001;
    config.problem.payoff.family = "mining_linear";
    config.problem.payoff.extraction_cost = 25.0;
    config.problem.payoff.fixed_cost = 5.0;
    config.problem.payoff.salvage_strike = 30.0;
    config.problem.levy.kind = "uniform";
    config.problem.levy.support_radius = 1.0;
    config.problem.levy.mass = 1.0;

    config.grid.time_steps = 64;
    config.grid.price_steps = 64;
    config.grid.reserve_steps = 32;
    config.grid.price_max = 64.0;
    config.grid.reserve_max = 10.0;

    config.quadrature.spacing = 0.05;
    config.solver = SolverConfig{};

    config.monte_carlo.dt = 0.05;
    config.monte_carlo.paths = 10000;
    config.monte_carlo.seed = 90210;
    config.monte_carlo.record_paths = 3;
    config.monte_carlo.allowance_constant = 25.0;
    config.monte_carlo.sample_points = {
        {2.5, 30.0, 5.0, 0},  {2.5, 40.0, 7.5, 1}, {5.0, 20.0, 2.5, 0},
        {5.0, 45.0, 5.0, 1},  {7.5, 35.0, 7.5, 0},
    };

    config.slices.times = {0.0, 4.75, 7.25, 10.0};
    config.slices.reserves = {0.0, 4.0, 7.0, 10.0};
    return config;
}

} // namespace orex
