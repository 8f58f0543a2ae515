#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace etdgrid {

// Battery physics constants. Charging multiplies stored energy by eta,
// discharging divides by it, so a full round trip returns eta^2 of the
// energy seen on the grid side.
struct BatteryParams {
    double capacity_kwh = 1000.0; // nameplate capacity
    double soc_min_kwh = 200.0;   // lower state-of-charge bound
    double soc_max_kwh = 1000.0;  // upper state-of-charge bound
    double eta = 0.9;             // charge/discharge efficiency, in (0, 1]
    double e_max_kwh = 200.0;     // max energy moved per step
    double dt_hours = 1.0;        // step duration

    void validate() const {
        if (!(soc_min_kwh >= 0.0) || !(soc_min_kwh < soc_max_kwh) || !(soc_max_kwh <= capacity_kwh))
            throw std::invalid_argument("battery: require 0 <= soc_min < soc_max <= capacity");
        if (!(eta > 0.0) || !(eta <= 1.0))
            throw std::invalid_argument("battery: require eta in (0, 1]");
        if (!(e_max_kwh > 0.0)) throw std::invalid_argument("battery: require e_max > 0");
        if (!(dt_hours > 0.0)) throw std::invalid_argument("battery: require dt > 0");
    }
};

struct BatteryState {
    double soc_kwh = 0.0;
};

// Five-level action set. Index -> level mapping is fixed:
//   0 -> -1 (full discharge), 1 -> -0.5, 2 -> 0 (idle), 3 -> +0.5, 4 -> +1 (full charge).
inline constexpr int kActionCount = 5;
inline constexpr std::array<double, kActionCount> kActionLevels = {-1.0, -0.5, 0.0, 0.5, 1.0};

inline double action_level(int action_index) {
    if (action_index < 0 || action_index >= kActionCount)
        throw std::invalid_argument("action index out of range: " + std::to_string(action_index));
    return kActionLevels[static_cast<std::size_t>(action_index)];
}

// Commanded battery power in kW for an action level: level * e_max / dt.
// Positive charges the battery, negative discharges it.
inline double action_to_power(double level, const BatteryParams& p) {
    return level * p.e_max_kwh / p.dt_hours;
}

inline double action_to_power(int action_index, const BatteryParams& p) {
    return action_to_power(action_level(action_index), p);
}

// Clamps a commanded power to the nearest value the state of charge admits.
// Charging may store at most (soc_max - soc)/eta grid-side energy, discharging
// may release at most (soc - soc_min)*eta. The sign is never flipped; feasible
// inputs pass through unchanged. Total: every input maps to a feasible power.
inline double clamp_feasible(double p_b_kw, const BatteryState& s, const BatteryParams& p) {
    if (p_b_kw > 0.0) {
        const double limit = (p.soc_max_kwh - s.soc_kwh) / (p.eta * p.dt_hours);
        return std::min(p_b_kw, std::max(limit, 0.0));
    }
    if (p_b_kw < 0.0) {
        const double limit = (p.soc_min_kwh - s.soc_kwh) * p.eta / p.dt_hours;
        return std::max(p_b_kw, std::min(limit, 0.0));
    }
    return 0.0;
}

// Advances the state of charge under an already-feasible power:
//   soc' = soc + eta*p*dt   (charge)
//   soc' = soc + p*dt/eta   (discharge)
// Throws if the power violates the SOC bounds beyond rounding tolerance.
inline BatteryState battery_step(const BatteryState& s, double p_b_kw, const BatteryParams& p) {
    constexpr double kTolKwh = 1e-6;
    double next = s.soc_kwh;
    if (p_b_kw > 0.0) {
        if (p_b_kw * p.dt_hours > (p.soc_max_kwh - s.soc_kwh) / p.eta + kTolKwh)
            throw std::invalid_argument("battery_step: charge power violates SOC upper bound");
        next = s.soc_kwh + p.eta * p_b_kw * p.dt_hours;
    } else if (p_b_kw < 0.0) {
        if (p_b_kw * p.dt_hours < (p.soc_min_kwh - s.soc_kwh) * p.eta - kTolKwh)
            throw std::invalid_argument("battery_step: discharge power violates SOC lower bound");
        next = s.soc_kwh + p_b_kw * p.dt_hours / p.eta;
    }
    next = std::clamp(next, p.soc_min_kwh, p.soc_max_kwh);
    return BatteryState{next};
}

} // namespace etdgrid
