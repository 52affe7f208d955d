#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace orex {

// ============================================================================
// Problem description: price/reserve dynamics, payoffs, regime generator and
// the jump measure.  Everything downstream (quadrature, solver, policy,
// simulation) consumes a ProblemSpec and nothing else.
// ============================================================================

// Markov generator of the driving regime chain.  Row-major m x m, rows sum
// to zero, off-diagonal entries nonnegative.  Regimes are 0-indexed here;
// user-facing layers label them 1..m.
struct RegimeGenerator {
    int count = 1;
    std::vector<double> rates; // row-major, count * count entries

    [[nodiscard]] double rate(int from, int to) const {
        return rates[static_cast<std::size_t>(from) * count + to];
    }
    [[nodiscard]] double exit_rate(int from) const { return -rate(from, from); }
};

// Jump-mark measure nu on a truncated symmetric support [-R, R], described
// by a density.  declared_mass is the modeller's total intensity Gamma; when
// absent the quadrature mass stands in for it.
struct LevyMeasureSpec {
    std::function<double(double)> density;
    double support_radius = 1.0;
    std::optional<double> declared_mass;
};

inline LevyMeasureSpec zero_levy_measure() {
    return {[](double) { return 0.0; }, 1.0, 0.0};
}

// Uniform density with total mass `mass` on [-radius, radius].
inline LevyMeasureSpec uniform_levy_measure(double radius, double mass) {
    double level = mass / (2.0 * radius);
    return {[level](double) { return level; }, radius, mass};
}

// Symmetric triangular density peaking at 0, total mass `mass`.
inline LevyMeasureSpec triangular_levy_measure(double radius, double mass) {
    return {[radius, mass](double z) {
                double w = 1.0 - std::abs(z) / radius;
                return w > 0.0 ? mass * w / radius : 0.0;
            },
            radius, mass};
}

// Piecewise-linear density through sorted (z, value) points, zero outside.
inline LevyMeasureSpec table_levy_measure(std::vector<std::pair<double, double>> points) {
    double radius = 1.0;
    for (const auto& p : points) radius = std::max(radius, std::abs(p.first));
    auto eval = [pts = std::move(points)](double z) -> double {
        if (pts.empty() || z < pts.front().first || z > pts.back().first) return 0.0;
        for (std::size_t j = 1; j < pts.size(); ++j) {
            if (z <= pts[j].first) {
                double span = pts[j].first - pts[j - 1].first;
                if (span <= 0.0) return pts[j].second;
                double w = (z - pts[j - 1].first) / span;
                return pts[j - 1].second * (1.0 - w) + pts[j].second * w;
            }
        }
        return pts.back().second;
    };
    return {std::move(eval), radius, std::nullopt};
}

// ----------------------------------------------------------------------------
// Coefficient families.
// ----------------------------------------------------------------------------

// Fully general callbacks.  The Lipschitz/growth constants are declared by
// the caller and only echoed in validation diagnostics; nothing can verify
// a black-box function.
struct GeneralCoefficients {
    std::function<double(double t, double x, double u, int regime)> drift;
    std::function<double(double t, double x, double u, int regime)> volatility;
    std::function<double(double t, double x, double u, int regime, double z)> jump;
    double lipschitz_constant = 0.0;
    double growth_constant = 0.0;
};

// Exponential-Levy family: dX = X (mu_i dt + sigma_i dW + scale_i z dN).
// All three parameter vectors are per-regime.
struct ExponentialLevyCoefficients {
    std::vector<double> drift;
    std::vector<double> volatility;
    std::vector<double> jump_scale;
};

// Exponential-Levy drift with linear price impact of the extraction rate:
// drift becomes X (mu_i - impact * u).
struct LargeProducerCoefficients {
    ExponentialLevyCoefficients base;
    double impact = 0.0; // in [0, 1)
};

using CoefficientModel =
    std::variant<GeneralCoefficients, ExponentialLevyCoefficients, LargeProducerCoefficients>;

// ----------------------------------------------------------------------------
// Payoff families.
// ----------------------------------------------------------------------------

struct GeneralPayoff {
    std::function<double(double t, double x, double y, double u, int regime)> running;
    std::function<double(double t, double x, double y, int regime)> terminal;
    double lipschitz_constant = 0.0;
};

// Linear extraction economics: running (x - extraction_cost) u - fixed_cost,
// terminal salvage (x - salvage_strike) y.
struct MiningLinearPayoff {
    double extraction_cost = 0.0;
    double fixed_cost = 0.0;
    double salvage_strike = 0.0;
};

using PayoffSpec = std::variant<GeneralPayoff, MiningLinearPayoff>;

// ----------------------------------------------------------------------------
// The full problem.
// ----------------------------------------------------------------------------

struct ProblemSpec {
    double discount_rate = 0.0; // r > 0
    double horizon = 0.0;       // T > 0
    double max_rate = 0.0;      // extraction rate cap K_u >= 0
    CoefficientModel coefficients;
    PayoffSpec payoff;
    RegimeGenerator regimes;
    LevyMeasureSpec levy = zero_levy_measure();
};

// True when the control enters drift and running payoff affinely, which is
// exactly when the sup over [0, K_u] is attained at an endpoint.
[[nodiscard]] inline bool affine_control_family(const ProblemSpec& spec) {
    bool payoff_ok = std::holds_alternative<MiningLinearPayoff>(spec.payoff);
    bool coeff_ok = !std::holds_alternative<GeneralCoefficients>(spec.coefficients);
    return payoff_ok && coeff_ok;
}

// ----------------------------------------------------------------------------
// Pointwise evaluation.
// ----------------------------------------------------------------------------

struct CoefficientValues {
    double drift = 0.0;
    double volatility = 0.0;
};

namespace detail {

inline void check_regime(const ProblemSpec& spec, int regime) {
    if (regime < 0 || regime >= spec.regimes.count)
        throw std::out_of_range("regime index " + std::to_string(regime) +
                                " outside [0, " + std::to_string(spec.regimes.count) + ")");
}

} // namespace detail

[[nodiscard]] inline CoefficientValues eval_coefficients(const ProblemSpec& spec, double t,
                                                         double x, double u, int regime) {
    detail::check_regime(spec, regime);
    return std::visit(
        [&](const auto& c) -> CoefficientValues {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, GeneralCoefficients>) {
                return {c.drift(t, x, u, regime), c.volatility(t, x, u, regime)};
            } else if constexpr (std::is_same_v<T, ExponentialLevyCoefficients>) {
                return {x * c.drift[regime], x * c.volatility[regime]};
            } else {
                return {x * (c.base.drift[regime] - c.impact * u),
                        x * c.base.volatility[regime]};
            }
        },
        spec.coefficients);
}

// Jump amplitude z -> gamma(t, x, u, regime, z).  Cheap value type so the
// solver can evaluate it per quadrature node without allocation.
struct JumpMap {
    const ProblemSpec* spec = nullptr;
    double t = 0.0, x = 0.0, u = 0.0;
    int regime = 0;

    double operator()(double z) const {
        return std::visit(
            [&](const auto& c) -> double {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, GeneralCoefficients>) {
                    return c.jump(t, x, u, regime, z);
                } else if constexpr (std::is_same_v<T, ExponentialLevyCoefficients>) {
                    return x * c.jump_scale[regime] * z;
                } else {
                    return x * c.base.jump_scale[regime] * z;
                }
            },
            spec->coefficients);
    }
};

[[nodiscard]] inline JumpMap eval_jump_map(const ProblemSpec& spec, double t, double x, double u,
                                           int regime) {
    detail::check_regime(spec, regime);
    return {&spec, t, x, u, regime};
}

struct PayoffValues {
    double running = 0.0;  // L
    double terminal = 0.0; // Phi
};

[[nodiscard]] inline PayoffValues eval_payoffs(const ProblemSpec& spec, double t, double x,
                                               double y, double u, int regime) {
    detail::check_regime(spec, regime);
    return std::visit(
        [&](const auto& p) -> PayoffValues {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GeneralPayoff>) {
                return {p.running(t, x, y, u, regime), p.terminal(t, x, y, regime)};
            } else {
                return {(x - p.extraction_cost) * u - p.fixed_cost,
                        (x - p.salvage_strike) * y};
            }
        },
        spec.payoff);
}

// ----------------------------------------------------------------------------
// Validation.
// ----------------------------------------------------------------------------

struct Violation {
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    [[nodiscard]] bool valid() const { return violations.empty(); }
};

// Structural checks on the spec.  Densities and callbacks are probed on a
// sample grid; a clean report is necessary, not sufficient, for black-box
// inputs.
[[nodiscard]] inline ValidationReport validate_problem(const ProblemSpec& spec) {
    ValidationReport report;
    auto flag = [&](std::string field, std::string message) {
        report.violations.push_back({std::move(field), std::move(message)});
    };

    if (!(spec.discount_rate > 0.0)) flag("discount_rate", "must be positive");
    if (!(spec.horizon > 0.0)) flag("horizon", "must be positive");
    if (!(spec.max_rate >= 0.0)) flag("max_rate", "must be nonnegative");

    const auto& gen = spec.regimes;
    if (gen.count < 1) {
        flag("regimes.count", "needs at least one regime");
    } else if (gen.rates.size() != static_cast<std::size_t>(gen.count) * gen.count) {
        flag("regimes.rates", "generator matrix must be count x count");
    } else {
        for (int i = 0; i < gen.count; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < gen.count; ++j) {
                double q = gen.rate(i, j);
                row_sum += q;
                if (i != j && q < 0.0)
                    flag("regimes.rates", "off-diagonal rate q[" + std::to_string(i + 1) + "][" +
                                              std::to_string(j + 1) + "] is negative");
            }
            if (std::abs(row_sum) > 1e-12)
                flag("regimes.rates",
                     "row " + std::to_string(i + 1) + " sums to " + std::to_string(row_sum) +
                         ", expected 0");
        }
    }

    if (!(spec.levy.support_radius >= 1.0))
        flag("levy.support_radius", "truncated support must satisfy R >= 1");
    if (!spec.levy.density) {
        flag("levy.density", "missing density");
    } else {
        const int probes = 257;
        double mass_probe = 0.0;
        double r_sup = std::max(spec.levy.support_radius, 1e-12);
        for (int j = 0; j < probes; ++j) {
            double z = -r_sup + 2.0 * r_sup * j / (probes - 1);
            double v = spec.levy.density(z);
            if (!(v >= 0.0)) {
                flag("levy.density", "negative or NaN at z = " + std::to_string(z));
                break;
            }
            mass_probe += v;
        }
        mass_probe *= 2.0 * r_sup / probes;
        if (!std::isfinite(mass_probe)) flag("levy.density", "mass probe not finite");
    }
    if (spec.levy.declared_mass && !(*spec.levy.declared_mass >= 0.0))
        flag("levy.declared_mass", "must be nonnegative");

    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, GeneralCoefficients>) {
                if (!c.drift || !c.volatility || !c.jump)
                    flag("coefficients", "general callbacks must all be set");
                if (!(c.lipschitz_constant > 0.0))
                    flag("coefficients.lipschitz_constant",
                         "declare a positive Lipschitz constant for general callbacks");
                if (!(c.growth_constant > 0.0))
                    flag("coefficients.growth_constant",
                         "declare a positive growth constant for general callbacks");
            } else if constexpr (std::is_same_v<T, ExponentialLevyCoefficients>) {
                std::size_t m = static_cast<std::size_t>(spec.regimes.count);
                if (c.drift.size() != m || c.volatility.size() != m || c.jump_scale.size() != m)
                    flag("coefficients", "per-regime parameter vectors must have one entry per regime");
            } else {
                std::size_t m = static_cast<std::size_t>(spec.regimes.count);
                if (c.base.drift.size() != m || c.base.volatility.size() != m ||
                    c.base.jump_scale.size() != m)
                    flag("coefficients", "per-regime parameter vectors must have one entry per regime");
                if (!(c.impact >= 0.0 && c.impact < 1.0))
                    flag("coefficients.impact", "impact parameter must lie in [0, 1)");
            }
        },
        spec.coefficients);

    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GeneralPayoff>) {
                if (!p.running || !p.terminal) flag("payoff", "general payoff callbacks must be set");
                if (!(p.lipschitz_constant > 0.0))
                    flag("payoff.lipschitz_constant",
                         "declare a positive Lipschitz constant for general payoffs");
            } else {
                if (!std::isfinite(p.extraction_cost) || !std::isfinite(p.fixed_cost) ||
                    !std::isfinite(p.salvage_strike))
                    flag("payoff", "mining payoff parameters must be finite");
            }
        },
        spec.payoff);

    return report;
}

} // namespace orex
