#pragma once

#include <orex/orex.hpp>

#include <cmath>
#include <random>
#include <vector>

// Shared fixtures for the test binaries.  Everything here builds plain
// ProblemSpec/Grid objects; no test depends on another test's state.
namespace testutil {

// The built-in two-regime extraction demo shipped by the CLI.
inline orex::ProblemSpec demo_spec() {
    return orex::to_problem_spec(orex::example5_config().problem);
}

// Same problem on a coarse grid so unit tests stay fast.
inline orex::Grid demo_grid_small() {
    return orex::Grid::make(16, 16, 8, 2, 10.0, 64.0, 10.0);
}

// Single-regime problem with motionless price (zero drift, volatility and
// jumps).  With constant running payoff and zero terminal payoff the value
// function is a deterministic annuity.
inline orex::ProblemSpec annuity_spec(double r, double horizon, double running) {
    orex::ProblemSpec spec;
    spec.discount_rate = r;
    spec.horizon = horizon;
    spec.max_rate = 0.0;
    spec.coefficients = orex::GeneralCoefficients{
        [](double, double, double, int) { return 0.0; },
        [](double, double, double, int) { return 0.0; },
        [](double, double, double, int, double) { return 0.0; },
        1.0,
        1.0,
    };
    spec.payoff = orex::GeneralPayoff{
        [running](double, double, double, double, int) { return running; },
        [](double, double, double, int) { return 0.0; },
        1.0,
    };
    spec.regimes.count = 1;
    spec.regimes.rates = {0.0};
    spec.levy = orex::zero_levy_measure();
    return spec;
}

// Single-regime exponential-dynamics spec with no jumps.
inline orex::ProblemSpec diffusion_spec(double r, double horizon, double drift,
                                        double volatility) {
    orex::ProblemSpec spec;
    spec.discount_rate = r;
    spec.horizon = horizon;
    spec.max_rate = 0.0;
    spec.coefficients = orex::ExponentialLevyCoefficients{{drift}, {volatility}, {0.0}};
    spec.payoff = orex::MiningLinearPayoff{0.0, 0.0, 0.0};
    spec.regimes.count = 1;
    spec.regimes.rates = {0.0};
    spec.levy = orex::zero_levy_measure();
    return spec;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace testutil
