#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace orex {

// Uniform tensor grid over [0, T] x [0, x_max] x [0, y_max] x regimes.
// Node counts are steps + 1 per axis; k, h, l are the mesh widths.
struct Grid {
    int time_steps = 1;    // n_s
    int price_steps = 1;   // n_x
    int reserve_steps = 1; // n_y
    int regime_count = 1;  // m

    double horizon = 1.0;     // T = n_s * k
    double price_max = 1.0;   // x_max = n_x * h
    double reserve_max = 1.0; // y_max = n_y * l

    double time_step = 1.0;    // k
    double price_step = 1.0;   // h
    double reserve_step = 1.0; // l

    static Grid make(int time_steps, int price_steps, int reserve_steps, int regime_count,
                     double horizon, double price_max, double reserve_max) {
        if (time_steps < 1 || price_steps < 1 || reserve_steps < 1)
            throw std::invalid_argument("grid needs at least one step per axis");
        if (regime_count < 1) throw std::invalid_argument("grid needs at least one regime");
        if (!(horizon > 0.0) || !(price_max > 0.0) || !(reserve_max > 0.0))
            throw std::invalid_argument("grid extents must be positive");
        Grid g;
        g.time_steps = time_steps;
        g.price_steps = price_steps;
        g.reserve_steps = reserve_steps;
        g.regime_count = regime_count;
        g.horizon = horizon;
        g.price_max = price_max;
        g.reserve_max = reserve_max;
        g.time_step = horizon / time_steps;
        g.price_step = price_max / price_steps;
        g.reserve_step = reserve_max / reserve_steps;
        return g;
    }

    [[nodiscard]] int time_nodes() const { return time_steps + 1; }
    [[nodiscard]] int price_nodes() const { return price_steps + 1; }
    [[nodiscard]] int reserve_nodes() const { return reserve_steps + 1; }

    [[nodiscard]] double s_value(int n) const { return n * time_step; }
    [[nodiscard]] double x_value(int ix) const { return ix * price_step; }
    [[nodiscard]] double y_value(int iy) const { return iy * reserve_step; }

    [[nodiscard]] std::size_t nodes_per_slice() const {
        return static_cast<std::size_t>(regime_count) * reserve_nodes() * price_nodes();
    }
    [[nodiscard]] std::size_t total_nodes() const {
        return static_cast<std::size_t>(time_nodes()) * nodes_per_slice();
    }

    // Index within one time slice; x runs fastest so jump stencils walk
    // contiguous memory.
    [[nodiscard]] std::size_t slice_index(int ix, int iy, int regime) const {
        return (static_cast<std::size_t>(regime) * reserve_nodes() + iy) * price_nodes() + ix;
    }
    [[nodiscard]] std::size_t node_index(int n, int ix, int iy, int regime) const {
        return static_cast<std::size_t>(n) * nodes_per_slice() + slice_index(ix, iy, regime);
    }
};

// Dense storage for a scalar grid function (the value function, or any
// iterate of it).
struct ValueField {
    Grid grid;
    std::vector<double> values;

    ValueField() = default;
    explicit ValueField(const Grid& g) : grid(g), values(g.total_nodes(), 0.0) {}

    [[nodiscard]] double& at(int n, int ix, int iy, int regime) {
        return values[grid.node_index(n, ix, iy, regime)];
    }
    [[nodiscard]] double at(int n, int ix, int iy, int regime) const {
        return values[grid.node_index(n, ix, iy, regime)];
    }

    [[nodiscard]] double* slice(int n) { return values.data() + grid.nodes_per_slice() * n; }
    [[nodiscard]] const double* slice(int n) const {
        return values.data() + grid.nodes_per_slice() * n;
    }
};

} // namespace orex
