#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "orex/model.hpp"

namespace orex {

// ============================================================================
// Composite-Simpson discretisation of the jump integral
//
//   I f (x) = sum_j c_j f(x + gamma(z_j))
//           - (df/dx)(x) * sum_j d_j gamma(w_j)
//           - f(x) * Gamma
//
// The c-rule covers the whole truncated support; the d-rule covers the
// compensated band and only nodes with |z| strictly below 1 carry weight.
// ============================================================================

struct QuadratureSet {
    double spacing = 0.0;              // xi
    std::vector<double> nodes;         // full-support abscissae z_j
    std::vector<double> weights;       // c_j = Simpson weight * density
    std::vector<double> small_nodes;   // compensated-band abscissae in [-1, 1]
    std::vector<double> small_weights; // d_j, zero where |z| == 1
    double total_mass = 0.0;           // sum of c_j, the numerical Gamma
};

namespace detail {

// Composite Simpson pattern 1,4,2,...,2,4,1 scaled by step/3.
inline double simpson_factor(std::size_t j, std::size_t last, double step) {
    double base = (j == 0 || j == last) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    return base * step / 3.0;
}

} // namespace detail

// Builds both Simpson rules for the measure.  The support is padded
// symmetrically with zero density when its width is not an even multiple of
// the spacing; the compensated band [-w, w], w = min(R, 1), always has an
// exactly fitting (possibly slightly finer) even panel count so no node
// escapes the band.
[[nodiscard]] inline QuadratureSet build_quadrature(const LevyMeasureSpec& levy, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("quadrature spacing must be positive");
    if (!(levy.support_radius > 0.0))
        throw std::invalid_argument("jump support radius must be positive");
    if (!levy.density) throw std::invalid_argument("jump density must be set");

    QuadratureSet q;
    q.spacing = spacing;
    const double radius = levy.support_radius;

    std::size_t panels = static_cast<std::size_t>(std::ceil(2.0 * radius / spacing - 1e-12));
    panels = std::max<std::size_t>(panels, 2);
    if (panels % 2 == 1) ++panels;
    const double half_width = 0.5 * static_cast<double>(panels) * spacing;

    q.nodes.resize(panels + 1);
    q.weights.resize(panels + 1);
    for (std::size_t j = 0; j <= panels; ++j) {
        double z = -half_width + static_cast<double>(j) * spacing;
        q.nodes[j] = z;
        double dens = std::abs(z) <= radius * (1.0 + 1e-12) ? levy.density(z) : 0.0;
        q.weights[j] = detail::simpson_factor(j, panels, spacing) * dens;
        q.total_mass += q.weights[j];
    }

    const double band = std::min(radius, 1.0);
    std::size_t band_panels = static_cast<std::size_t>(std::ceil(2.0 * band / spacing - 1e-12));
    band_panels = std::max<std::size_t>(band_panels, 2);
    if (band_panels % 2 == 1) ++band_panels;
    const double band_step = 2.0 * band / static_cast<double>(band_panels);

    q.small_nodes.resize(band_panels + 1);
    q.small_weights.resize(band_panels + 1);
    for (std::size_t j = 0; j <= band_panels; ++j) {
        double z = -band + static_cast<double>(j) * band_step;
        q.small_nodes[j] = z;
        // The compensation indicator is strict: marks of size exactly 1 are
        // uncompensated and carry no d-weight.
        bool compensated = std::abs(z) < 1.0 - 1e-14;
        double dens = compensated ? levy.density(z) : 0.0;
        q.small_weights[j] = detail::simpson_factor(j, band_panels, band_step) * dens;
    }
    return q;
}

// Linearly interpolated view of one x-row of a value slice, clamped to the
// grid so jump destinations outside [x_min, x_min + step*(n-1)] read the
// boundary value.
struct XSlice {
    std::span<const double> values;
    double x_min = 0.0;
    double step = 1.0;

    double operator()(double x) const {
        double pos = (x - x_min) / step;
        if (pos <= 0.0) return values.front();
        double last = static_cast<double>(values.size() - 1);
        if (pos >= last) return values.back();
        std::size_t i0 = static_cast<std::size_t>(pos);
        double w = pos - static_cast<double>(i0);
        return values[i0] * (1.0 - w) + values[i0 + 1] * w;
    }
};

// Compensated drift sum d_j * gamma(w_j) for a jump amplitude map.
template <class Jump>
[[nodiscard]] double compensator_sum(const QuadratureSet& q, Jump&& jump) {
    double acc = 0.0;
    for (std::size_t j = 0; j < q.small_nodes.size(); ++j) {
        double w = q.small_weights[j];
        if (w != 0.0) acc += w * jump(q.small_nodes[j]);
    }
    return acc;
}

// Core quadrature form of the nonlocal operator applied to a callable f at
// x, given a jump amplitude map and the slope df/dx to use for the
// compensation term.
template <class Fn, class Jump>
[[nodiscard]] double apply_nonlocal(Fn&& f, const QuadratureSet& q, Jump&& jump, double x,
                                    double slope) {
    double shifted = 0.0;
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
        double w = q.weights[j];
        if (w != 0.0) shifted += w * f(x + jump(q.nodes[j]));
    }
    return shifted - slope * compensator_sum(q, jump) - f(x) * q.total_mass;
}

// Problem-level wrapper: evaluates the operator for the spec's jump map at
// state (t, x) under control u in the given regime.
template <class Fn>
[[nodiscard]] double apply_nonlocal(Fn&& f, const QuadratureSet& q, const ProblemSpec& spec,
                                    double t, double x, double u, int regime, double slope) {
    return apply_nonlocal(std::forward<Fn>(f), q, eval_jump_map(spec, t, x, u, regime), x, slope);
}

} // namespace orex
