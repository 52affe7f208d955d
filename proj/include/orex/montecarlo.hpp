#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "orex/model.hpp"
#include "orex/parallel.hpp"
#include "orex/policy.hpp"
#include "orex/quadrature.hpp"

namespace orex {

// ============================================================================
// Monte Carlo valuation of a feedback rule under the jump-diffusion price
// with exact regime switching.  Independent of the grid scheme: Euler steps
// for the diffusion, a compound-Poisson clock driven by the sampled jump
// density, regime paths drawn from the exact holding-time construction.
// Identical seeds give identical results for any RHJB_THREADS setting.
// ============================================================================

// SplitMix64 finaliser; used to derive decorrelated per-path seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t path_seed(std::uint64_t root, std::uint64_t path) {
    return splitmix64(root + 0x9E3779B97F4A7C15ULL * (path + 1));
}

// Pseudorandom source with bit-stable output across standard libraries:
// the engine is the standardised mt19937_64 and every distribution below
// is derived from it with fixed arithmetic, never through std::
// distribution objects (whose streams are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1); safe under log().
    [[nodiscard]] double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller with one cached spare.
    [[nodiscard]] double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double radius = std::sqrt(-2.0 * std::log(uniform()));
        double angle = 6.283185307179586476925286766559 * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    [[nodiscard]] double exponential(double mean_rate) {
        return -std::log(uniform()) / mean_rate;
    }

    // Counts unit-exponential arrivals inside [0, mean]; exact and free of
    // the underflow the classic product form hits for large means.
    [[nodiscard]] int poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        int count = 0;
        double clock = exponential(1.0);
        while (clock < mean) {
            ++count;
            clock += exponential(1.0);
        }
        return count;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// ----------------------------------------------------------------------------
// Exact regime path.
// ----------------------------------------------------------------------------

struct RegimeSwitch {
    double time = 0.0;
    int state = 0; // state entered at `time`
};

struct RegimePath {
    double start = 0.0;
    int initial_state = 0;
    std::vector<RegimeSwitch> switches; // strictly increasing times

    [[nodiscard]] int state_at(double t) const {
        int state = initial_state;
        for (const auto& s : switches) {
            if (s.time > t) break;
            state = s.state;
        }
        return state;
    }
};

// Holding-time construction: exponential sojourn at rate -q_ii, next state
// drawn proportionally to the off-diagonal row.
[[nodiscard]] inline RegimePath simulate_regime(const RegimeGenerator& gen, double t0, double t1,
                                                int initial_state, Rng& rng) {
    if (initial_state < 0 || initial_state >= gen.count)
        throw std::out_of_range("simulate_regime: initial state out of range");
    RegimePath path;
    path.start = t0;
    path.initial_state = initial_state;
    double t = t0;
    int state = initial_state;
    while (true) {
        double exit = gen.exit_rate(state);
        if (!(exit > 0.0)) break;
        t += rng.exponential(exit);
        if (t >= t1) break;
        double target = rng.uniform() * exit;
        double acc = 0.0;
        int next = state;
        for (int j = 0; j < gen.count; ++j) {
            if (j == state) continue;
            acc += gen.rate(state, j);
            if (target < acc) {
                next = j;
                break;
            }
        }
        if (next == state) { // rounding fell past the last positive rate
            for (int j = gen.count - 1; j >= 0; --j)
                if (j != state && gen.rate(state, j) > 0.0) {
                    next = j;
                    break;
                }
            if (next == state) break;
        }
        path.switches.push_back({t, next});
        state = next;
    }
    return path;
}

[[nodiscard]] inline RegimePath simulate_regime(const RegimeGenerator& gen, double t0, double t1,
                                                int initial_state, std::uint64_t seed) {
    Rng rng(seed);
    return simulate_regime(gen, t0, t1, initial_state, rng);
}

// ----------------------------------------------------------------------------
// Jump machinery: mark sampling by inverting the piecewise-linear density
// CDF (exact when the density itself is piecewise linear on the bin grid),
// plus the small-jump compensation sum evaluated with a fine band rule so
// the simulated drift convention matches the grid scheme's.
// ----------------------------------------------------------------------------

struct JumpActivity {
    double intensity = 0.0;          // total mass of the sampled density
    std::vector<double> edge;        // bin edges over [-R, R]
    std::vector<double> density;     // density at the edges
    std::vector<double> cumulative;  // mass up to each edge
    std::vector<double> band_nodes;  // compensation band |z| < 1
    std::vector<double> band_weights;
    double band_first_moment = 0.0;  // sum w_j z_j over the band
    bool linear_jump_map = false;    // jump amplitude is gamma(...) * z

    [[nodiscard]] bool active() const { return intensity > 0.0; }

    [[nodiscard]] double sample_mark(Rng& rng) const {
        double target = rng.uniform() * intensity;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        std::size_t bin = it == cumulative.begin()
                              ? 0
                              : static_cast<std::size_t>(it - cumulative.begin()) - 1;
        bin = std::min(bin, edge.size() - 2);
        double width = edge[bin + 1] - edge[bin];
        double v0 = density[bin];
        double slope = (density[bin + 1] - v0) / width;
        double local = target - cumulative[bin];
        // Root of 0.5*slope*w^2 + v0*w = local in its numerically stable form.
        double disc = std::max(v0 * v0 + 2.0 * slope * local, 0.0);
        double denom = v0 + std::sqrt(disc);
        double w = denom > 0.0 ? 2.0 * local / denom : 0.5 * width;
        return edge[bin] + std::min(std::max(w, 0.0), width);
    }

    // Drift correction sum(w_j * gamma(z_j)) over the compensation band.
    [[nodiscard]] double compensation(const ProblemSpec& spec, double t, double x, double u,
                                      int regime) const {
        if (band_nodes.empty()) return 0.0;
        auto jump = eval_jump_map(spec, t, x, u, regime);
        if (linear_jump_map) return jump(1.0) * band_first_moment;
        double acc = 0.0;
        for (std::size_t j = 0; j < band_nodes.size(); ++j)
            if (band_weights[j] != 0.0) acc += band_weights[j] * jump(band_nodes[j]);
        return acc;
    }
};

// Tabulates the mark density on `bins` uniform cells and precomputes the
// trapezoid CDF used for inversion; the Poisson rate is that same mass so
// the sampled measure is internally consistent.
[[nodiscard]] inline JumpActivity make_jump_activity(const ProblemSpec& spec, int bins = 2048) {
    JumpActivity activity;
    activity.linear_jump_map = !std::holds_alternative<GeneralCoefficients>(spec.coefficients);
    if (!spec.levy.density) return activity;
    if (bins < 2) throw std::invalid_argument("make_jump_activity: need at least 2 bins");

    const double radius = spec.levy.support_radius;
    activity.edge.resize(static_cast<std::size_t>(bins) + 1);
    activity.density.resize(activity.edge.size());
    activity.cumulative.resize(activity.edge.size());
    for (int j = 0; j <= bins; ++j) {
        double z = -radius + 2.0 * radius * j / bins;
        activity.edge[static_cast<std::size_t>(j)] = z;
        double v = spec.levy.density(z);
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("make_jump_activity: density must be finite and >= 0");
        activity.density[static_cast<std::size_t>(j)] = v;
    }
    activity.cumulative[0] = 0.0;
    for (int j = 0; j < bins; ++j) {
        double width = activity.edge[static_cast<std::size_t>(j) + 1] -
                       activity.edge[static_cast<std::size_t>(j)];
        double mass = 0.5 *
                      (activity.density[static_cast<std::size_t>(j)] +
                       activity.density[static_cast<std::size_t>(j) + 1]) *
                      width;
        activity.cumulative[static_cast<std::size_t>(j) + 1] =
            activity.cumulative[static_cast<std::size_t>(j)] + mass;
    }
    activity.intensity = activity.cumulative.back();

    // Fine band rule for the compensation sum, same convention as the
    // scheme's quadrature (strict |z| < 1 indicator).
    QuadratureSet fine = build_quadrature(spec.levy, radius / 512.0);
    activity.band_nodes = std::move(fine.small_nodes);
    activity.band_weights = std::move(fine.small_weights);
    for (std::size_t j = 0; j < activity.band_nodes.size(); ++j)
        activity.band_first_moment += activity.band_weights[j] * activity.band_nodes[j];
    return activity;
}

// ----------------------------------------------------------------------------
// Path simulation.
// ----------------------------------------------------------------------------

struct PathPoint {
    double time = 0.0;
    double price = 0.0;
    double reserve = 0.0;
    double rate = 0.0;
    int regime = 0;
};

struct PathJump {
    double time = 0.0;
    double mark = 0.0;
    double shift = 0.0; // price increment gamma(t, x, u, mark)
};

struct PathSample {
    std::vector<PathPoint> states;
    std::vector<PathJump> jumps;
    double stop_time = 0.0;
    bool stopped_early = false; // rule said stop before the horizon
    double payoff = 0.0;        // discounted to the start time
};

namespace detail {

inline double run_path(const ProblemSpec& spec, const JumpActivity& activity,
                       const PolicyRule& rule, double t0, double x0, double y0,
                       int initial_regime, double dt, Rng& rng, PathSample* record) {
    const double horizon = spec.horizon;
    const double r = spec.discount_rate;
    const double t_eps = 1e-12 * std::max(1.0, horizon);

    RegimePath regimes = simulate_regime(spec.regimes, t0, horizon, initial_regime, rng);
    std::size_t next_switch = 0;

    double t = t0;
    double x = x0;
    double y = std::max(0.0, y0);
    int regime = initial_regime;
    double payoff = 0.0;
    long grid_steps = 0;

    while (true) {
        ControlDecision decision = rule(t, x, y, regime);
        double u = std::clamp(decision.rate, 0.0, std::max(0.0, spec.max_rate));
        if (y <= 0.0) u = 0.0;
        // Exhaustion time of the current reserve at the chosen rate.  When
        // the residual reserve is so small that this time does not advance
        // the clock at all (y/u below the time resolution at t), treat the
        // reserve as spent; otherwise the event loop could stall on a
        // zero-length step.
        double exhaust = std::numeric_limits<double>::infinity();
        if (u > 0.0 && y > 0.0) {
            exhaust = t + y / u;
            if (!(exhaust > t)) {
                y = 0.0;
                u = 0.0;
                exhaust = std::numeric_limits<double>::infinity();
            }
        }
        if (record) record->states.push_back({t, x, y, u, regime});

        bool at_horizon = t >= horizon - t_eps;
        if (decision.stop || at_horizon) {
            payoff += std::exp(-r * (t - t0)) * eval_payoffs(spec, t, x, y, u, regime).terminal;
            if (record) {
                record->stop_time = t;
                record->stopped_early = decision.stop && !at_horizon;
            }
            return payoff;
        }

        double next_grid = t0 + dt * static_cast<double>(grid_steps + 1);
        double t_next = std::min(next_grid, horizon);
        bool take_switch = false;
        if (next_switch < regimes.switches.size() &&
            regimes.switches[next_switch].time <= t_next) {
            t_next = regimes.switches[next_switch].time;
            take_switch = true;
        }
        // Reserve exhaustion is an event of its own: extraction at rate u
        // can only run for y/u, after which u is forced to 0.  Without the
        // split, a step would accrue running payoff for extraction the
        // reserve cannot supply.
        if (exhaust < t_next) {
            t_next = exhaust;
            take_switch = false;
        }

        double delta = t_next - t;
        if (delta > 0.0) {
            payoff += std::exp(-r * (t - t0)) *
                      eval_payoffs(spec, t, x, y, u, regime).running * delta;
            auto coeff = eval_coefficients(spec, t, x, u, regime);
            double comp = activity.compensation(spec, t, x, u, regime);
            double z = rng.normal();
            double x_new =
                x + (coeff.drift - comp) * delta + coeff.volatility * std::sqrt(delta) * z;
            if (activity.active()) {
                int arrivals = rng.poisson(activity.intensity * delta);
                for (int a = 0; a < arrivals; ++a) {
                    double mark = activity.sample_mark(rng);
                    double shift = eval_jump_map(spec, t, x_new, u, regime)(mark);
                    if (record) record->jumps.push_back({t_next, mark, shift});
                    x_new += shift;
                }
            }
            x = x_new;
            y = std::max(0.0, y - u * delta);
        }
        t = t_next;
        if (take_switch) {
            regime = regimes.switches[next_switch].state;
            ++next_switch;
        }
        if (t >= next_grid - t_eps) ++grid_steps;
    }
}

inline void check_simulation_inputs(const ProblemSpec& spec, double t0, double dt,
                                    int initial_regime) {
    if (!(dt > 0.0)) throw std::invalid_argument("simulation: dt must be positive");
    if (!(t0 >= 0.0) || !(t0 <= spec.horizon))
        throw std::invalid_argument("simulation: start time outside [0, horizon]");
    if (initial_regime < 0 || initial_regime >= spec.regimes.count)
        throw std::out_of_range("simulation: initial regime out of range");
}

} // namespace detail

// One fully recorded path.
[[nodiscard]] inline PathSample simulate_path(const ProblemSpec& spec, const PolicyRule& rule,
                                              double t0, double x0, double y0, int initial_regime,
                                              double dt, std::uint64_t seed,
                                              const JumpActivity* activity = nullptr) {
    detail::check_simulation_inputs(spec, t0, dt, initial_regime);
    JumpActivity local;
    if (activity == nullptr) {
        local = make_jump_activity(spec);
        activity = &local;
    }
    PathSample sample;
    Rng rng(seed);
    sample.payoff =
        detail::run_path(spec, *activity, rule, t0, x0, y0, initial_regime, dt, rng, &sample);
    return sample;
}

struct ValueEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long paths = 0;
};

// Sample mean of the discounted payoff under `rule` from the given state.
// Paths run in parallel with deterministic per-path seeds; the reduction is
// sequential, so results are bitwise reproducible for any worker count.
[[nodiscard]] inline ValueEstimate estimate_value(const ProblemSpec& spec, const PolicyRule& rule,
                                                  double t0, double x0, double y0,
                                                  int initial_regime, double dt, long paths,
                                                  std::uint64_t seed,
                                                  const JumpActivity* activity = nullptr) {
    detail::check_simulation_inputs(spec, t0, dt, initial_regime);
    if (paths < 2) throw std::invalid_argument("estimate_value: need at least 2 paths");
    JumpActivity local;
    if (activity == nullptr) {
        local = make_jump_activity(spec);
        activity = &local;
    }

    std::vector<double> payoffs(static_cast<std::size_t>(paths));
    parallel_for(payoffs.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            Rng rng(path_seed(seed, p));
            payoffs[p] =
                detail::run_path(spec, *activity, rule, t0, x0, y0, initial_regime, dt, rng,
                                 nullptr);
        }
    });

    double mean = 0.0;
    for (double v : payoffs) mean += v;
    mean /= static_cast<double>(paths);
    double variance = 0.0;
    for (double v : payoffs) variance += (v - mean) * (v - mean);
    variance /= static_cast<double>(paths - 1);

    ValueEstimate est;
    est.mean = mean;
    est.std_error = std::sqrt(variance / static_cast<double>(paths));
    est.paths = paths;
    return est;
}

// Constant-rate reference rules, handy for dominance checks.
[[nodiscard]] inline PolicyRule constant_rule(double rate, double stop_after = -1.0) {
    return [rate, stop_after](double t, double, double, int) -> ControlDecision {
        return {rate, stop_after >= 0.0 && t >= stop_after};
    };
}

} // namespace orex
