#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "orex/errors.hpp"
#include "orex/grid.hpp"
#include "orex/model.hpp"
#include "orex/parallel.hpp"
#include "orex/quadrature.hpp"

namespace orex {

// ============================================================================
// Finite-difference solver for the obstacle problem
//
//   V = max( sup_u  [ time + advection + diffusion + nonlocal + coupling
//                     + running payoff / r ]  /  (1 + diagonal mass),
//            terminal payoff )
//
// per backward time slice.  Space derivatives are upwinded, the reserve
// advection uses the backward difference (information flows from smaller
// reserves), and every neighbour weight is nonnegative, so one application
// of the operator is monotone and per-slice Jacobi iteration contracts in
// the sup norm.
// ============================================================================

struct SolveOptions {
    double tolerance = 1e-8;     // sup-norm residual target per slice
    int max_iterations = 20000;  // per-slice sweep cap
    int control_samples = 8;     // N_u: equispaced samples of [0, K_u]
};

// Weights of the normalised fixed-point operator at one (time, price,
// regime, control).  The reserve and time weights multiply V(y - l) and
// V(s + k); the diagonal is the mass that moves to the denominator.
struct SchemeCoefficients {
    double up_weight = 0.0;
    double down_weight = 0.0;
    double diagonal = 0.0;
    double reserve_weight = 0.0;
    double time_weight = 0.0;
    double jump_weight_sum = 0.0; // signed compensated drift over (r h)
    int drift_direction = 0;      // +1 forward, -1 backward, 0 none
    int compensator_direction = 0;
};

// Discretised control set.  Always starts at 0; for the affine family only
// the endpoints of [0, K_u] are kept, since the per-control candidate is a
// ratio of affine functions of u and its sup sits at an endpoint.
[[nodiscard]] inline std::vector<double> control_candidates(const ProblemSpec& spec,
                                                            const SolveOptions& options) {
    if (!(spec.max_rate > 0.0)) return {0.0};
    if (affine_control_family(spec)) return {0.0, spec.max_rate};
    int n = std::max(1, options.control_samples);
    std::vector<double> u(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) u[static_cast<std::size_t>(j)] = spec.max_rate * j / n;
    return u;
}

// Reference jump intensity: the declared mass when given, else the
// quadrature mass itself.
[[nodiscard]] inline double reference_mass(const ProblemSpec& spec, const QuadratureSet& quad) {
    return spec.levy.declared_mass.value_or(quad.total_mass);
}

[[nodiscard]] inline SchemeCoefficients assemble_coefficients(const ProblemSpec& spec,
                                                              const Grid& grid,
                                                              const QuadratureSet& quad,
                                                              int time_index, int price_index,
                                                              int regime, double rate) {
    const double r = spec.discount_rate;
    const double s = grid.s_value(time_index);
    const double x = grid.x_value(price_index);
    const double h = grid.price_step;

    auto coeff = eval_coefficients(spec, s, x, rate, regime);
    const double comp = compensator_sum(quad, eval_jump_map(spec, s, x, rate, regime));

    SchemeCoefficients out;
    out.time_weight = 1.0 / (r * grid.time_step);
    out.reserve_weight = rate / (r * grid.reserve_step);
    out.jump_weight_sum = comp / (r * h);

    const double diff = coeff.volatility * coeff.volatility / (2.0 * r * h * h);
    const double drift_up = std::max(coeff.drift, 0.0) / (r * h);
    const double drift_down = std::max(-coeff.drift, 0.0) / (r * h);
    // The compensation term acts as an extra drift of -comp; its upwind side
    // is opposite to the sign of comp.
    const double comp_up = std::max(-comp, 0.0) / (r * h);
    const double comp_down = std::max(comp, 0.0) / (r * h);

    out.up_weight = diff + drift_up + comp_up;
    out.down_weight = diff + drift_down + comp_down;
    out.drift_direction = coeff.drift > 0.0 ? 1 : (coeff.drift < 0.0 ? -1 : 0);
    out.compensator_direction = comp < 0.0 ? 1 : (comp > 0.0 ? -1 : 0);

    double coupling = 0.0;
    for (int g = 0; g < spec.regimes.count; ++g)
        if (g != regime) coupling += spec.regimes.rate(regime, g);

    out.diagonal = out.time_weight + 2.0 * diff + (drift_up + drift_down + comp_up + comp_down) +
                   reference_mass(spec, quad) / r + coupling / r + out.reserve_weight;
    return out;
}

// ----------------------------------------------------------------------------
// Slice assembly: everything the Jacobi sweep needs, precomputed per time
// slice.  Coefficients depend on (s, x, u, regime) only, so rows are shared
// across reserve levels; running payoffs get their own per-(y, x) table.
// ----------------------------------------------------------------------------

namespace detail {

struct AssemblyDiagnostics {
    long long negative_weights = 0;
    double min_weight = 0.0;
    double max_running = 0.0;  // max |L|
    double max_terminal = 0.0; // max |Phi|
};

struct ControlRow {
    double rate = 0.0;
    double reserve_weight = 0.0;
    std::vector<double> up, down, inv_denom;
    std::vector<double> source;       // L / r, indexed iy * nx + ix
    std::vector<int> jump_offsets;    // per ix, into jump_entries
    std::vector<int> jump_index;      // target ix
    std::vector<double> jump_value;   // weight c_j / r split by interpolation
};

struct SliceAssembly {
    Grid grid;
    double time_weight = 0.0;
    std::vector<double> controls;
    std::vector<std::vector<ControlRow>> rows; // [regime][control]
    std::vector<double> obstacle;              // per slice index
    std::vector<double> coupling;              // q(i,j)/r, row-major
};

inline void note_weight(AssemblyDiagnostics* diag, double w) {
    if (diag == nullptr) return;
    diag->min_weight = std::min(diag->min_weight, w);
    if (!(w >= 0.0)) ++diag->negative_weights;
}

inline void guard_weight(AssemblyDiagnostics* diag, double w, int time_index,
                         const char* what) {
    if (!(w >= 0.0) && diag == nullptr)
        throw NonMonotoneStencil(std::string(what) + " weight " + std::to_string(w) +
                                 " at slice " + std::to_string(time_index));
    note_weight(diag, w);
}

// Builds the operator for slice `time_index`.  With diag == nullptr a
// negative weight throws NonMonotoneStencil; otherwise it is only counted.
inline SliceAssembly assemble_slice(const ProblemSpec& spec, const Grid& grid,
                                    const QuadratureSet& quad, int time_index,
                                    const std::vector<double>& controls,
                                    AssemblyDiagnostics* diag = nullptr) {
    SliceAssembly a;
    a.grid = grid;
    a.controls = controls;
    const double r = spec.discount_rate;
    const double s = grid.s_value(time_index);
    const int nx = grid.price_nodes();
    const int ny = grid.reserve_nodes();
    const int m = grid.regime_count;

    a.time_weight = 1.0 / (r * grid.time_step);
    a.coupling.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i)
        for (int g = 0; g < m; ++g)
            if (g != i) {
                double w = spec.regimes.rate(i, g) / r;
                guard_weight(diag, w, time_index, "regime coupling");
                a.coupling[static_cast<std::size_t>(i) * m + g] = w;
            }

    a.obstacle.resize(grid.nodes_per_slice());
    for (int ig = 0; ig < m; ++ig)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                double phi =
                    eval_payoffs(spec, s, grid.x_value(ix), grid.y_value(iy), 0.0, ig).terminal;
                a.obstacle[grid.slice_index(ix, iy, ig)] = phi;
                if (diag != nullptr)
                    diag->max_terminal = std::max(diag->max_terminal, std::abs(phi));
            }

    a.rows.resize(static_cast<std::size_t>(m));
    std::vector<double> dense(static_cast<std::size_t>(nx), 0.0);
    for (int ig = 0; ig < m; ++ig) {
        a.rows[ig].resize(controls.size());
        for (std::size_t cu = 0; cu < controls.size(); ++cu) {
            ControlRow& row = a.rows[ig][cu];
            const double u = controls[cu];
            row.rate = u;
            row.reserve_weight = u / (r * grid.reserve_step);
            guard_weight(diag, row.reserve_weight, time_index, "reserve");
            row.up.resize(nx);
            row.down.resize(nx);
            row.inv_denom.resize(nx);
            row.jump_offsets.assign(static_cast<std::size_t>(nx) + 1, 0);

            for (int ix = 0; ix < nx; ++ix) {
                auto c = assemble_coefficients(spec, grid, quad, time_index, ix, ig, u);
                guard_weight(diag, c.up_weight, time_index, "price up");
                guard_weight(diag, c.down_weight, time_index, "price down");
                if (!std::isfinite(c.diagonal))
                    throw NonMonotoneStencil("non-finite diagonal at slice " +
                                             std::to_string(time_index));
                row.up[ix] = c.up_weight;
                row.down[ix] = c.down_weight;
                row.inv_denom[ix] = 1.0 / (1.0 + c.diagonal);

                // Jump stencil: linear interpolation of the shifted price,
                // clamped to the grid, weights folded by target node.
                auto jump = eval_jump_map(spec, s, grid.x_value(ix), u, ig);
                std::fill(dense.begin(), dense.end(), 0.0);
                bool any = false;
                for (std::size_t j = 0; j < quad.nodes.size(); ++j) {
                    double w = quad.weights[j];
                    if (w == 0.0) continue;
                    guard_weight(diag, w, time_index, "jump");
                    double pos = (grid.x_value(ix) + jump(quad.nodes[j])) / grid.price_step;
                    pos = std::clamp(pos, 0.0, static_cast<double>(nx - 1));
                    auto i0 = static_cast<std::size_t>(pos);
                    double frac = pos - static_cast<double>(i0);
                    dense[i0] += w / r * (1.0 - frac);
                    if (frac > 0.0) dense[i0 + 1] += w / r * frac;
                    any = true;
                }
                row.jump_offsets[ix + 1] = row.jump_offsets[ix];
                if (any)
                    for (int tx = 0; tx < nx; ++tx)
                        if (dense[tx] != 0.0) {
                            row.jump_index.push_back(tx);
                            row.jump_value.push_back(dense[tx]);
                            ++row.jump_offsets[ix + 1];
                        }
            }

            row.source.resize(static_cast<std::size_t>(ny) * nx);
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    double L =
                        eval_payoffs(spec, s, grid.x_value(ix), grid.y_value(iy), u, ig).running;
                    row.source[static_cast<std::size_t>(iy) * nx + ix] = L / r;
                    if (diag != nullptr)
                        diag->max_running = std::max(diag->max_running, std::abs(L));
                }
        }
    }
    return a;
}

// One Jacobi sweep of the normalised operator.  Reads the previous iterate
// `cur` and the finalised next slice `next`, writes `out`, returns the
// sup-norm residual.  Node results are independent, so the sweep
// parallelises without changing a single bit of the output.
inline double sweep_slice(const SliceAssembly& a, const double* cur, const double* next,
                          double* out) {
    const Grid& grid = a.grid;
    const int nx = grid.price_nodes();
    const int ny = grid.reserve_nodes();
    const int m = grid.regime_count;
    const std::size_t row_len = static_cast<std::size_t>(nx);
    const std::size_t nodes = grid.nodes_per_slice();

    constexpr std::size_t chunk = 1024;
    const std::size_t n_chunks = (nodes + chunk - 1) / chunk;
    std::vector<double> chunk_residual(n_chunks, 0.0);

    parallel_for(
        n_chunks,
        [&](std::size_t cb, std::size_t ce) {
            for (std::size_t ci = cb; ci < ce; ++ci) {
                double res = 0.0;
                std::size_t begin = ci * chunk;
                std::size_t end = std::min(nodes, begin + chunk);
                for (std::size_t id = begin; id < end; ++id) {
                    int ig = static_cast<int>(id / (static_cast<std::size_t>(ny) * nx));
                    std::size_t rem = id % (static_cast<std::size_t>(ny) * nx);
                    int iy = static_cast<int>(rem / row_len);
                    int ix = static_cast<int>(rem % row_len);
                    const std::size_t y_row = id - static_cast<std::size_t>(ix);

                    std::size_t n_controls = iy == 0 ? 1 : a.controls.size();
                    double best = -std::numeric_limits<double>::infinity();
                    for (std::size_t cu = 0; cu < n_controls; ++cu) {
                        const detail::ControlRow& row = a.rows[ig][cu];
                        double num = a.time_weight * next[id] + row.source[rem];
                        num += row.up[ix] * cur[ix < nx - 1 ? id + 1 : id];
                        num += row.down[ix] * cur[ix > 0 ? id - 1 : id];
                        if (iy > 0) num += row.reserve_weight * cur[id - row_len];
                        for (int e = row.jump_offsets[ix]; e < row.jump_offsets[ix + 1]; ++e)
                            num += row.jump_value[e] * cur[y_row + row.jump_index[e]];
                        for (int g = 0; g < m; ++g) {
                            double w = a.coupling[static_cast<std::size_t>(ig) * m + g];
                            if (w != 0.0) num += w * cur[grid.slice_index(ix, iy, g)];
                        }
                        double val = num * row.inv_denom[ix];
                        best = std::max(best, val);
                    }
                    double v = std::max(best, a.obstacle[id]);
                    out[id] = v;
                    res = std::max(res, std::abs(v - cur[id]));
                }
                chunk_residual[ci] = res;
            }
        },
        1);

    double residual = 0.0;
    for (double rc : chunk_residual) residual = std::max(residual, rc);
    return residual;
}

} // namespace detail

// ----------------------------------------------------------------------------
// Reports.
// ----------------------------------------------------------------------------

struct SliceStats {
    int iterations = 0;
    double first_residual = 0.0;
    double final_residual = 0.0;
    double max_ratio = 0.0; // max residual ratio between successive sweeps
};

struct SolveReport {
    std::vector<SliceStats> slices; // index n = time slice, excludes terminal
    double contraction_bound = 0.0; // |quadrature mass - Gamma| / r
    int total_sweeps = 0;

    [[nodiscard]] double max_ratio() const {
        double v = 0.0;
        for (const auto& s : slices) v = std::max(v, s.max_ratio);
        return v;
    }
    [[nodiscard]] int max_iterations() const {
        int v = 0;
        for (const auto& s : slices) v = std::max(v, s.iterations);
        return v;
    }
};

struct SchemeReport {
    bool monotone = true;
    long long negative_weights = 0;
    double min_weight = 0.0;
    double contraction_bound = 0.0;
    double stability_bound = 0.0; // sup-norm bound on the discrete solution
};

struct SolveResult {
    ValueField value;
    SolveReport report;
};

namespace detail {

inline void check_contraction(const ProblemSpec& spec, const QuadratureSet& quad) {
    double bound = std::abs(quad.total_mass - reference_mass(spec, quad)) / spec.discount_rate;
    if (bound >= 1.0)
        throw ContractionViolation(
            "quadrature mass " + std::to_string(quad.total_mass) + " vs declared intensity " +
            std::to_string(reference_mass(spec, quad)) + " gives |difference|/r = " +
            std::to_string(bound) + " >= 1; shrink the quadrature spacing");
}

} // namespace detail

// Terminal condition plus backward induction.  Each slice is iterated to
// the sup-norm tolerance and the obstacle is applied inside every sweep, so
// the returned field satisfies V >= terminal payoff exactly.
[[nodiscard]] inline SolveResult solve(const ProblemSpec& spec, const Grid& grid,
                                       const QuadratureSet& quad,
                                       const SolveOptions& options = {}) {
    detail::check_contraction(spec, quad);
    const auto controls = control_candidates(spec, options);

    SolveResult result{ValueField(grid), {}};
    result.report.contraction_bound =
        std::abs(quad.total_mass - reference_mass(spec, quad)) / spec.discount_rate;
    result.report.slices.resize(static_cast<std::size_t>(grid.time_steps));

    ValueField& field = result.value;
    const std::size_t slice_nodes = grid.nodes_per_slice();

    for (int ig = 0; ig < grid.regime_count; ++ig)
        for (int iy = 0; iy < grid.reserve_nodes(); ++iy)
            for (int ix = 0; ix < grid.price_nodes(); ++ix)
                field.at(grid.time_steps, ix, iy, ig) =
                    eval_payoffs(spec, grid.horizon, grid.x_value(ix), grid.y_value(iy), 0.0, ig)
                        .terminal;

    std::vector<double> cur(slice_nodes), fresh(slice_nodes);
    for (int n = grid.time_steps - 1; n >= 0; --n) {
        auto assembly = detail::assemble_slice(spec, grid, quad, n, controls);
        const double* next = field.slice(n + 1);
        std::copy(next, next + slice_nodes, cur.begin());

        SliceStats& stats = result.report.slices[static_cast<std::size_t>(n)];
        double prev_residual = 0.0;
        while (true) {
            double residual = detail::sweep_slice(assembly, cur.data(), next, fresh.data());
            ++stats.iterations;
            ++result.report.total_sweeps;
            if (stats.iterations == 1) stats.first_residual = residual;
            else if (prev_residual > 0.0)
                stats.max_ratio = std::max(stats.max_ratio, residual / prev_residual);
            stats.final_residual = residual;
            cur.swap(fresh);
            if (residual < options.tolerance) break;
            if (stats.iterations >= options.max_iterations)
                throw std::runtime_error("slice " + std::to_string(n) + " did not reach " +
                                         std::to_string(options.tolerance) + " in " +
                                         std::to_string(stats.iterations) +
                                         " sweeps (residual " + std::to_string(residual) + ")");
            prev_residual = residual;
        }
        std::copy(cur.begin(), cur.end(), field.slice(n));
    }
    return result;
}

// One application of the slice operator to an arbitrary field: returns the
// would-be slice n values given slice n as current iterate and slice n+1 as
// data.  At the terminal index it returns the terminal payoff itself.
[[nodiscard]] inline std::vector<double> scheme_apply(const ValueField& field,
                                                      const ProblemSpec& spec, const Grid& grid,
                                                      const QuadratureSet& quad, int time_index,
                                                      const SolveOptions& options = {}) {
    std::vector<double> out(grid.nodes_per_slice());
    if (time_index == grid.time_steps) {
        for (int ig = 0; ig < grid.regime_count; ++ig)
            for (int iy = 0; iy < grid.reserve_nodes(); ++iy)
                for (int ix = 0; ix < grid.price_nodes(); ++ix)
                    out[grid.slice_index(ix, iy, ig)] =
                        eval_payoffs(spec, grid.horizon, grid.x_value(ix), grid.y_value(iy), 0.0,
                                     ig)
                            .terminal;
        return out;
    }
    detail::check_contraction(spec, quad);
    auto assembly =
        detail::assemble_slice(spec, grid, quad, time_index, control_candidates(spec, options));
    detail::sweep_slice(assembly, field.slice(time_index), field.slice(time_index + 1),
                        out.data());
    return out;
}

// Scans every slice, node and control for stencil defects and reports the
// contraction precondition together with the data-driven sup-norm bound
//   max( max |terminal|, max |running| / (r (1 - contraction)) ).
[[nodiscard]] inline SchemeReport check_scheme(const ProblemSpec& spec, const Grid& grid,
                                               const QuadratureSet& quad,
                                               const SolveOptions& options = {}) {
    SchemeReport report;
    report.contraction_bound =
        std::abs(quad.total_mass - reference_mass(spec, quad)) / spec.discount_rate;

    detail::AssemblyDiagnostics diag;
    const auto controls = control_candidates(spec, options);
    for (int n = 0; n < grid.time_steps; ++n)
        (void)detail::assemble_slice(spec, grid, quad, n, controls, &diag);
    for (int ig = 0; ig < grid.regime_count; ++ig)
        for (int iy = 0; iy < grid.reserve_nodes(); ++iy)
            for (int ix = 0; ix < grid.price_nodes(); ++ix)
                diag.max_terminal = std::max(
                    diag.max_terminal,
                    std::abs(eval_payoffs(spec, grid.horizon, grid.x_value(ix),
                                          grid.y_value(iy), 0.0, ig)
                                 .terminal));

    report.negative_weights = diag.negative_weights;
    report.min_weight = diag.min_weight;
    report.monotone = diag.negative_weights == 0;
    if (report.contraction_bound < 1.0)
        report.stability_bound =
            std::max(diag.max_terminal,
                     diag.max_running / (spec.discount_rate * (1.0 - report.contraction_bound)));
    else
        report.stability_bound = std::numeric_limits<double>::infinity();
    return report;
}

} // namespace orex
