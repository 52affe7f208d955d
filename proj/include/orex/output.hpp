#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "orex/config.hpp"
#include "orex/grid.hpp"
#include "orex/montecarlo.hpp"
#include "orex/policy.hpp"
#include "orex/solver.hpp"

namespace orex {

// ============================================================================
// File artifacts.  All floats print with 17 significant digits so the CSVs
// round-trip through double exactly; every writer is deterministic.
// ============================================================================

[[nodiscard]] inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_artifact(const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary: byte-identical reruns
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

} // namespace detail

// value.csv: columns s, x, y, regime, V; rows ordered by s, regime, y, x.
inline void write_value_csv(std::ostream& out, const ValueField& field) {
    const Grid& grid = field.grid;
    out << "s,x,y,regime,V\n";
    for (int n = 0; n <= grid.time_steps; ++n)
        for (int ig = 0; ig < grid.regime_count; ++ig)
            for (int iy = 0; iy <= grid.reserve_steps; ++iy)
                for (int ix = 0; ix <= grid.price_steps; ++ix)
                    out << fmt17(grid.s_value(n)) << ',' << fmt17(grid.x_value(ix)) << ','
                        << fmt17(grid.y_value(iy)) << ',' << ig + 1 << ','
                        << fmt17(field.at(n, ix, iy, ig)) << '\n';
}

// policy.csv: columns s, x, y, regime, u_star, stop; same row order.
inline void write_policy_csv(std::ostream& out, const PolicyField& policy) {
    const Grid& grid = policy.grid;
    out << "s,x,y,regime,u_star,stop\n";
    for (int n = 0; n <= grid.time_steps; ++n)
        for (int ig = 0; ig < grid.regime_count; ++ig)
            for (int iy = 0; iy <= grid.reserve_steps; ++iy)
                for (int ix = 0; ix <= grid.price_steps; ++ix)
                    out << fmt17(grid.s_value(n)) << ',' << fmt17(grid.x_value(ix)) << ','
                        << fmt17(grid.y_value(iy)) << ',' << ig + 1 << ','
                        << fmt17(policy.rate_at(n, ix, iy, ig)) << ','
                        << (policy.stop_at(n, ix, iy, ig) ? 1 : 0) << '\n';
}

// boundary_<regime>.csv: data columns param, x_boundary.  Slice groups are
// introduced by '#' comment lines; rows without a stop->continue flip
// appear as '#' status lines so a fully stopped slice leaves the file
// empty apart from the header and flags.
inline void write_boundary_csv(std::ostream& out, const std::vector<BoundaryCurve>& curves) {
    out << "param,x_boundary\n";
    for (const auto& curve : curves) {
        const char* axis =
            curve.slice.fixed_axis == BoundarySlice::Axis::time ? "time s=" : "reserve y=";
        out << "# slice " << axis << fmt17(curve.grid_value)
            << " (requested " << fmt17(curve.slice.value) << ")\n";
        for (const auto& p : curve.points) {
            switch (p.status) {
            case BoundaryStatus::edge:
                out << fmt17(p.parameter) << ',' << fmt17(p.price) << '\n';
                break;
            case BoundaryStatus::all_stop:
                out << "# param=" << fmt17(p.parameter) << " all_stop\n";
                break;
            case BoundaryStatus::below_grid:
                out << "# param=" << fmt17(p.parameter) << " below_grid\n";
                break;
            }
        }
    }
}

// paths.csv: recorded simulation states, columns path, time, price,
// reserve, rate, regime.
inline void write_paths_csv(std::ostream& out, const std::vector<PathSample>& samples) {
    out << "path,time,price,reserve,rate,regime\n";
    for (std::size_t p = 0; p < samples.size(); ++p)
        for (const auto& st : samples[p].states)
            out << p << ',' << fmt17(st.time) << ',' << fmt17(st.price) << ','
                << fmt17(st.reserve) << ',' << fmt17(st.rate) << ',' << st.regime + 1 << '\n';
}

[[nodiscard]] inline nlohmann::json report_json(const SolveReport& solve,
                                                const SchemeReport& scheme,
                                                double runtime_seconds) {
    nlohmann::json slices = nlohmann::json::array();
    for (std::size_t n = 0; n < solve.slices.size(); ++n) {
        const auto& s = solve.slices[n];
        slices.push_back({{"time_index", n},
                          {"iterations", s.iterations},
                          {"first_residual", s.first_residual},
                          {"final_residual", s.final_residual},
                          {"contraction_ratio", s.max_ratio}});
    }
    return {{"contraction_bound", solve.contraction_bound},
            {"total_sweeps", solve.total_sweeps},
            {"max_contraction_ratio", solve.max_ratio()},
            {"max_slice_iterations", solve.max_iterations()},
            {"slices", std::move(slices)},
            {"monotone", scheme.monotone},
            {"negative_weights", scheme.negative_weights},
            {"min_weight", scheme.min_weight},
            {"stability_bound", scheme.stability_bound},
            {"runtime_seconds", runtime_seconds}};
}

struct ValidationPoint {
    SamplePoint point;
    double grid_value = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    bool pass = false;
};

[[nodiscard]] inline nlohmann::json validation_json(const std::vector<ValidationPoint>& points,
                                                    double allowance_constant,
                                                    double discretization_term) {
    bool all_pass = true;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : points) {
        all_pass = all_pass && p.pass;
        rows.push_back({{"s", p.point.s},
                        {"x", p.point.x},
                        {"y", p.point.y},
                        {"regime", p.point.regime + 1},
                        {"grid_V", p.grid_value},
                        {"mc_mean", p.mc_mean},
                        {"mc_stderr", p.mc_stderr},
                        {"pass", p.pass}});
    }
    return {{"allowance_constant", allowance_constant},
            {"discretization_term", discretization_term},
            {"points", std::move(rows)},
            {"all_pass", all_pass}};
}

[[nodiscard]] inline nlohmann::json simulation_json(const MonteCarloConfig& mc,
                                                    const std::vector<ValueEstimate>& estimates) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t p = 0; p < estimates.size() && p < mc.sample_points.size(); ++p) {
        const auto& pt = mc.sample_points[p];
        rows.push_back({{"s", pt.s},
                        {"x", pt.x},
                        {"y", pt.y},
                        {"regime", pt.regime + 1},
                        {"mean", estimates[p].mean},
                        {"std_error", estimates[p].std_error},
                        {"paths", estimates[p].paths}});
    }
    return {{"dt", mc.dt}, {"seed", mc.seed}, {"points", std::move(rows)}};
}

inline void write_text_file(const std::string& path, const std::string& text) {
    auto out = detail::open_artifact(path);
    out << text;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace orex
