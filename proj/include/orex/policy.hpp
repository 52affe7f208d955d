#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "orex/errors.hpp"
#include "orex/grid.hpp"
#include "orex/model.hpp"
#include "orex/parallel.hpp"
#include "orex/quadrature.hpp"
#include "orex/solver.hpp"

namespace orex {

// ============================================================================
// Policy recovery from a solved value field: optimal extraction rate per
// node, the stopping region, and free-boundary curves along grid slices.
// ============================================================================

struct ControlDecision {
    double rate = 0.0;
    bool stop = false;
};

// Feedback rule queried by the simulator at (t, x, y, regime).
using PolicyRule = std::function<ControlDecision(double, double, double, int)>;

struct PolicyField {
    Grid grid;
    std::vector<double> rate;    // u*, same index layout as ValueField
    std::vector<std::uint8_t> stop;

    PolicyField() = default;
    explicit PolicyField(const Grid& g)
        : grid(g), rate(g.total_nodes(), 0.0), stop(g.total_nodes(), 0) {}

    [[nodiscard]] double rate_at(int n, int ix, int iy, int regime) const {
        return rate[grid.node_index(n, ix, iy, regime)];
    }
    [[nodiscard]] bool stop_at(int n, int ix, int iy, int regime) const {
        return stop[grid.node_index(n, ix, iy, regime)] != 0;
    }
};

namespace detail {

// Central/one-sided price derivative of one x-row.
inline double price_slope(std::span<const double> row, int ix, double h) {
    int last = static_cast<int>(row.size()) - 1;
    if (ix > 0 && ix < last) return (row[ix + 1] - row[ix - 1]) / (2.0 * h);
    if (ix == 0) return (row[1] - row[0]) / h;
    return (row[last] - row[last - 1]) / h;
}

inline double price_curvature(std::span<const double> row, int ix, double h) {
    int last = static_cast<int>(row.size()) - 1;
    if (ix == 0 || ix == last) return 0.0;
    return (row[ix + 1] - 2.0 * row[ix] + row[ix - 1]) / (h * h);
}

} // namespace detail

// Control-dependent part of the discrete Hamiltonian at a node, evaluated
// with the field's central price differences, backward reserve difference
// and the Simpson nonlocal term.  Used for the argmax; terms constant in u
// are omitted.
[[nodiscard]] inline double policy_hamiltonian(const ValueField& field, const ProblemSpec& spec,
                                               const QuadratureSet& quad, int n, int ix, int iy,
                                               int regime, double u) {
    const Grid& grid = field.grid;
    const double s = grid.s_value(n);
    const double x = grid.x_value(ix);
    const double y = grid.y_value(iy);
    const double h = grid.price_step;

    const double* base = field.slice(n);
    std::span<const double> row(base + grid.slice_index(0, iy, regime),
                                static_cast<std::size_t>(grid.price_nodes()));
    const double slope = detail::price_slope(row, ix, h);
    const double curvature = detail::price_curvature(row, ix, h);
    double reserve_slope = 0.0;
    if (iy > 0)
        reserve_slope = (row[ix] - base[grid.slice_index(ix, iy - 1, regime)]) / grid.reserve_step;

    auto coeff = eval_coefficients(spec, s, x, u, regime);
    double nonlocal = apply_nonlocal(XSlice{row, 0.0, h}, quad, spec, s, x, u, regime, slope);
    double running = eval_payoffs(spec, s, x, y, u, regime).running;

    return 0.5 * coeff.volatility * coeff.volatility * curvature + coeff.drift * slope +
           nonlocal - u * reserve_slope + running;
}

// Stop flag tolerance: scale-aware cushion above the terminal payoff.
[[nodiscard]] inline double stop_tie_tolerance(double terminal) {
    return 1e-7 * (1.0 + std::abs(terminal));
}

// Recovers the feedback policy from a solved field.  The rate is the
// Hamiltonian argmax over the same discretised control set the solver used,
// ties resolved toward the smaller rate; reserve-empty nodes always get
// rate 0.  The stop flag marks nodes where the value has collapsed onto the
// terminal payoff.
[[nodiscard]] inline PolicyField extract_policy(const ValueField& field, const ProblemSpec& spec,
                                                const QuadratureSet& quad,
                                                const SolveOptions& options = {}) {
    const Grid& grid = field.grid;
    PolicyField policy(grid);
    const auto controls = control_candidates(spec, options);

    for (int n = 0; n <= grid.time_steps; ++n) {
        const std::size_t slice_nodes = grid.nodes_per_slice();
        parallel_for(slice_nodes, [&](std::size_t b, std::size_t e) {
            const int nx = grid.price_nodes();
            const int ny = grid.reserve_nodes();
            for (std::size_t id = b; id < e; ++id) {
                int ig = static_cast<int>(id / (static_cast<std::size_t>(ny) * nx));
                std::size_t rem = id % (static_cast<std::size_t>(ny) * nx);
                int iy = static_cast<int>(rem / nx);
                int ix = static_cast<int>(rem % nx);
                std::size_t global = grid.nodes_per_slice() * n + id;

                double terminal =
                    eval_payoffs(spec, grid.s_value(n), grid.x_value(ix), grid.y_value(iy), 0.0,
                                 ig)
                        .terminal;
                double v = field.values[global];
                policy.stop[global] = v - terminal <= stop_tie_tolerance(terminal) ? 1 : 0;

                double best_rate = 0.0;
                if (iy > 0 && controls.size() > 1) {
                    double best = -std::numeric_limits<double>::infinity();
                    for (double u : controls) {
                        double hval = policy_hamiltonian(field, spec, quad, n, ix, iy, ig, u);
                        if (hval > best) {
                            best = hval;
                            best_rate = u;
                        }
                    }
                }
                policy.rate[global] = best_rate;
            }
        });
    }
    return policy;
}

// Linear switching functional for the price-impact mining family:
//   -impact * x * dV/dx - dV/dy + (x - extraction_cost).
// Positive means extract at the cap; nonpositive means idle.  Evaluated
// with the same differences as the policy Hamiltonian, so on any node the
// sign agrees with the extracted endpoint decision.
[[nodiscard]] inline double bang_bang_criterion(const ValueField& field, const ProblemSpec& spec,
                                                int n, int ix, int iy, int regime) {
    const auto* coeffs = std::get_if<LargeProducerCoefficients>(&spec.coefficients);
    const auto* payoff = std::get_if<MiningLinearPayoff>(&spec.payoff);
    if (coeffs == nullptr || payoff == nullptr)
        throw WrongFamily("switching criterion needs price-impact coefficients and linear "
                          "mining payoff");

    const Grid& grid = field.grid;
    const double* base = field.slice(n);
    std::span<const double> row(base + grid.slice_index(0, iy, regime),
                                static_cast<std::size_t>(grid.price_nodes()));
    double slope = detail::price_slope(row, ix, grid.price_step);
    double reserve_slope = 0.0;
    if (iy > 0)
        reserve_slope = (row[ix] - base[grid.slice_index(ix, iy - 1, regime)]) / grid.reserve_step;

    double x = grid.x_value(ix);
    return -coeffs->impact * x * slope - reserve_slope + (x - payoff->extraction_cost);
}

// ----------------------------------------------------------------------------
// Free boundary along grid slices.
// ----------------------------------------------------------------------------

enum class BoundaryStatus {
    edge,        // stop below, continue above: boundary price reported
    all_stop,    // no flip, the whole price row stops
    below_grid,  // continuation already at x = 0, no stop->continue flip above
};

struct BoundaryPoint {
    double parameter = 0.0; // y when time is fixed, s when reserve is fixed
    double price = 0.0;     // grid-edge boundary estimate, valid for status edge
    BoundaryStatus status = BoundaryStatus::edge;
};

struct BoundarySlice {
    enum class Axis { time, reserve };
    Axis fixed_axis = Axis::time;
    double value = 0.0;
};

struct BoundaryCurve {
    int regime = 0; // 0-indexed
    BoundarySlice slice;
    double grid_value = 0.0; // nearest grid coordinate actually used
    std::vector<BoundaryPoint> points;
    int no_flip_count = 0;
    int below_grid_count = 0;

    [[nodiscard]] std::vector<BoundaryPoint> edges() const {
        std::vector<BoundaryPoint> out;
        for (const auto& p : points)
            if (p.status == BoundaryStatus::edge) out.push_back(p);
        return out;
    }
};

namespace detail {

inline BoundaryPoint scan_price_row(const PolicyField& policy, int n, int iy, int regime,
                                    double parameter) {
    const Grid& grid = policy.grid;
    BoundaryPoint point;
    point.parameter = parameter;
    bool any_continue = false;
    for (int ix = 0; ix < grid.price_nodes(); ++ix)
        if (!policy.stop_at(n, ix, iy, regime)) {
            any_continue = true;
            break;
        }
    for (int ix = 0; ix + 1 < grid.price_nodes(); ++ix) {
        if (policy.stop_at(n, ix, iy, regime) && !policy.stop_at(n, ix + 1, iy, regime)) {
            point.price = 0.5 * (grid.x_value(ix) + grid.x_value(ix + 1));
            point.status = BoundaryStatus::edge;
            return point;
        }
    }
    point.status = any_continue ? BoundaryStatus::below_grid : BoundaryStatus::all_stop;
    return point;
}

} // namespace detail

// Scans the stop field for the lowest stop->continue flip in price along
// the requested slice.  Parameters without a flip are reported with a
// degenerate status instead of a price.
[[nodiscard]] inline BoundaryCurve free_boundary(const PolicyField& policy,
                                                 const BoundarySlice& slice, int regime) {
    const Grid& grid = policy.grid;
    if (regime < 0 || regime >= grid.regime_count)
        throw std::out_of_range("free_boundary: regime index out of range");
    BoundaryCurve curve;
    curve.regime = regime;
    curve.slice = slice;

    if (slice.fixed_axis == BoundarySlice::Axis::time) {
        int n = static_cast<int>(std::lround(slice.value / grid.time_step));
        n = std::clamp(n, 0, grid.time_steps);
        curve.grid_value = grid.s_value(n);
        for (int iy = 0; iy <= grid.reserve_steps; ++iy)
            curve.points.push_back(
                detail::scan_price_row(policy, n, iy, regime, grid.y_value(iy)));
    } else {
        int iy = static_cast<int>(std::lround(slice.value / grid.reserve_step));
        iy = std::clamp(iy, 0, grid.reserve_steps);
        curve.grid_value = grid.y_value(iy);
        for (int n = 0; n <= grid.time_steps; ++n)
            curve.points.push_back(detail::scan_price_row(policy, n, iy, regime, grid.s_value(n)));
    }

    for (const auto& p : curve.points) {
        if (p.status == BoundaryStatus::all_stop) ++curve.no_flip_count;
        if (p.status == BoundaryStatus::below_grid) ++curve.below_grid_count;
    }
    return curve;
}

// Feedback rule backed by a policy field: nearest node in price and
// reserve, the in-force slice in time (floor), exact in regime.  The
// policy object must outlive the rule.
[[nodiscard]] inline PolicyRule grid_policy_rule(const PolicyField& policy) {
    const PolicyField* p = &policy;
    return [p](double t, double x, double y, int regime) -> ControlDecision {
        const Grid& grid = p->grid;
        int n = static_cast<int>(std::floor(t / grid.time_step + 1e-9));
        n = std::clamp(n, 0, grid.time_steps);
        int ix = static_cast<int>(std::lround(x / grid.price_step));
        ix = std::clamp(ix, 0, grid.price_steps);
        int iy = static_cast<int>(std::lround(y / grid.reserve_step));
        iy = std::clamp(iy, 0, grid.reserve_steps);
        regime = std::clamp(regime, 0, grid.regime_count - 1);
        return {p->rate_at(n, ix, iy, regime), p->stop_at(n, ix, iy, regime)};
    };
}

} // namespace orex
