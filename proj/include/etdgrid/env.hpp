#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "etdgrid/battery.hpp"
#include "etdgrid/forecast.hpp"
#include "etdgrid/series.hpp"

namespace etdgrid {

// Grid import and curtailment implied by the power balance
// p_u + p_b - p_g + p_c = 0. Exactly one of the two is nonzero.
struct GridBalance {
    double p_g = 0.0; // grid import, kW (>= 0)
    double p_c = 0.0; // curtailed surplus, kW (>= 0)
};

inline GridBalance grid_balance(double p_u, double p_b) {
    GridBalance g;
    const double net = p_u + p_b;
    g.p_g = std::max(net, 0.0);
    g.p_c = std::max(-net, 0.0);
    return g;
}

// Reward for one step: the cost and emission reduction the battery action
// achieves relative to doing nothing, blended by the emission weight. Both
// deltas compare grid import with and without the battery's power.
struct Reward {
    double cost_delta = 0.0;     // currency saved this step
    double emission_delta = 0.0; // kg CO2 avoided this step
    double value = 0.0;          // cost_delta + alpha * emission_delta
};

inline Reward reward(double p_u, double p_b, double price, double ci, double alpha, double dt_hours) {
    Reward r;
    const double import_without = std::max(p_u, 0.0);
    const double import_with = std::max(p_u + p_b, 0.0);
    const double saved_kwh = (import_without - import_with) * dt_hours;
    r.cost_delta = price * saved_kwh;
    r.emission_delta = ci * saved_kwh;
    r.value = r.cost_delta + alpha * r.emission_delta;
    return r;
}

// Observation layout: for each horizon k = 0..T the triple
// (p_u, price, ci) with k = 0 measured and k >= 1 forecast, then battery
// state of charge. All entries min-max normalized. Length 3*(T+1) + 1.
using StateVector = std::vector<double>;

inline std::size_t state_size(int horizon) { return 3 * (static_cast<std::size_t>(horizon) + 1) + 1; }

inline StateVector build_state(const YearSeries& series, const ForecastBundle& forecasts,
                               std::size_t t, double soc_kwh, const NormStats& stats) {
    const int T = forecasts.horizon();
    if (t >= forecasts.origins()) throw std::out_of_range("build_state: origin out of range");

    StateVector s;
    s.reserve(state_size(T));
    const TimePoint& now = series.points[t];
    s.push_back(stats.norm_pu(unmet_power(now)));
    s.push_back(stats.norm_pr(now.price_per_kwh));
    s.push_back(stats.norm_ci(now.ci_kg_per_kwh));
    for (int k = 1; k <= T; ++k) {
        s.push_back(stats.norm_pu(forecasts.at(Var::unmet, t, k)));
        s.push_back(stats.norm_pr(forecasts.at(Var::price, t, k)));
        s.push_back(stats.norm_ci(forecasts.at(Var::carbon, t, k)));
    }
    s.push_back(stats.norm_soc(soc_kwh));
    return s;
}

// Everything one environment step produces. Power values are the realized
// (post-clamp) ones; reward is computed from measured series values.
struct StepOutcome {
    double p_b = 0.0; // realized battery power, kW
    double p_g = 0.0;
    double p_c = 0.0;
    Reward rew;
    BatteryState next_battery;
};

// Applies an action at series row t: map the action index to a power
// request, clamp it to what the battery allows, settle the power balance,
// score the step, and advance the state of charge.
inline StepOutcome env_step(const YearSeries& series, std::size_t t, const BatteryState& battery,
                            int action_index, const BatteryParams& params, double alpha) {
    if (t >= series.size()) throw std::out_of_range("env_step: series row out of range");
    const TimePoint& now = series.points[t];
    const double p_u = unmet_power(now);

    StepOutcome out;
    const double requested = action_to_power(action_index, params);
    out.p_b = clamp_feasible(requested, battery, params);
    const GridBalance g = grid_balance(p_u, out.p_b);
    out.p_g = g.p_g;
    out.p_c = g.p_c;
    out.rew = reward(p_u, out.p_b, now.price_per_kwh, now.ci_kg_per_kwh, alpha, params.dt_hours);
    out.next_battery = battery_step(battery, out.p_b, params);
    return out;
}

// Next observation after a step, or nothing when t+1 has no full forecast
// window (the episode must end there).
inline std::optional<StateVector> next_state(const YearSeries& series, const ForecastBundle& forecasts,
                                             std::size_t t, const BatteryState& next_battery,
                                             const NormStats& stats) {
    if (t + 1 >= forecasts.origins()) return std::nullopt;
    return build_state(series, forecasts, t + 1, next_battery.soc_kwh, stats);
}

} // namespace etdgrid
