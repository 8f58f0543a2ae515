#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "etdgrid/battery.hpp"
#include "etdgrid/env.hpp"
#include "etdgrid/series.hpp"

namespace etdgrid {

// Uniform SOC grid from soc_min upward; the top bucket is the last grid
// point that fits at or below soc_max. States between grid points snap to
// the nearest bucket.
struct DpGrid {
    double soc_min = 0.0;
    double resolution = 0.0;
    std::size_t buckets = 0;

    double soc_of(std::size_t b) const { return soc_min + static_cast<double>(b) * resolution; }

    std::size_t bucket_of(double soc) const {
        const double raw = std::round((soc - soc_min) / resolution);
        if (raw <= 0.0) return 0;
        const auto b = static_cast<std::size_t>(raw);
        return b >= buckets ? buckets - 1 : b;
    }
};

inline DpGrid make_dp_grid(const BatteryParams& params, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("dp: resolution must be positive");
    DpGrid g;
    g.soc_min = params.soc_min_kwh;
    g.resolution = resolution;
    g.buckets = static_cast<std::size_t>(
                    std::floor((params.soc_max_kwh - params.soc_min_kwh) / resolution + 1e-9)) +
                1;
    return g;
}

// Perfect-information solution over the discretized battery: value table,
// the optimal action sequence from the start bucket, and a documented
// per-step Lipschitz bound for converting grid resolution into a reward
// tolerance.
struct DpSolution {
    DpGrid grid;
    double gamma = 1.0;
    double start_soc = 0.0;
    std::size_t steps = 0;
    double total_reward = 0.0;
    std::vector<int> actions;
    std::vector<double> values; // (steps+1) x buckets, time-major

    double value_at(std::size_t t, std::size_t bucket) const {
        return values.at(t * grid.buckets + bucket);
    }

    // One kWh of SOC moves realized power by at most max(eta, 1/eta)/dt, so
    // per-step reward moves by at most L = max_t(pr + alpha*ci) * max(eta,
    // 1/eta) per kWh. Snapping perturbs SOC by at most half a bucket per
    // step; the standard telescoping argument gives the bound below, and any
    // policy's reward is at most total_reward + tolerance().
    double lipschitz = 0.0;
    double tolerance() const { return lipschitz * grid.resolution * static_cast<double>(steps); }
};

// Backward induction with the same action/clamp/reward/step primitives as
// the live environment, SOC snapped to the grid after every step. Action
// ties resolve to the lowest index.
inline DpSolution dp_oracle(const YearSeries& window, const BatteryParams& params, double alpha,
                            double soc_resolution, double gamma = 1.0, double start_soc = -1.0) {
    if (window.points.empty()) throw std::invalid_argument("dp: window is empty");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("dp: gamma must be in (0, 1]");
    params.validate();

    DpSolution sol;
    sol.grid = make_dp_grid(params, soc_resolution);
    sol.gamma = gamma;
    sol.steps = window.size();
    sol.start_soc = start_soc < 0.0 ? params.soc_min_kwh : start_soc;

    const std::size_t nb = sol.grid.buckets;
    const std::size_t na = static_cast<std::size_t>(kActionCount);

    // Battery dynamics are time-invariant: realized power and the successor
    // bucket depend only on (bucket, action).
    std::vector<double> power(nb * na);
    std::vector<std::uint32_t> next(nb * na);
    for (std::size_t b = 0; b < nb; ++b) {
        BatteryState st{sol.grid.soc_of(b)};
        for (std::size_t a = 0; a < na; ++a) {
            const double p = clamp_feasible(action_to_power(static_cast<int>(a), params), st, params);
            power[b * na + a] = p;
            next[b * na + a] =
                static_cast<std::uint32_t>(sol.grid.bucket_of(battery_step(st, p, params).soc_kwh));
        }
    }

    sol.lipschitz = 0.0;
    for (const auto& p : window.points)
        sol.lipschitz = std::max(sol.lipschitz, p.price_per_kwh + alpha * p.ci_kg_per_kwh);
    sol.lipschitz *= std::max(params.eta, 1.0 / params.eta);

    sol.values.assign((sol.steps + 1) * nb, 0.0);
    std::vector<std::int8_t> best(sol.steps * nb, 0);
    for (std::size_t t = sol.steps; t-- > 0;) {
        const TimePoint& now = window.points[t];
        const double p_u = unmet_power(now);
        const double* vnext = sol.values.data() + (t + 1) * nb;
        double* vhere = sol.values.data() + t * nb;
        for (std::size_t b = 0; b < nb; ++b) {
            double best_value = 0.0;
            int best_action = 0;
            for (std::size_t a = 0; a < na; ++a) {
                const double r =
                    reward(p_u, power[b * na + a], now.price_per_kwh, now.ci_kg_per_kwh, alpha,
                           params.dt_hours)
                        .value;
                const double v = r + gamma * vnext[next[b * na + a]];
                if (a == 0 || v > best_value) {
                    best_value = v;
                    best_action = static_cast<int>(a);
                }
            }
            vhere[b] = best_value;
            best[t * nb + b] = static_cast<std::int8_t>(best_action);
        }
    }

    sol.actions.resize(sol.steps);
    std::size_t b = sol.grid.bucket_of(sol.start_soc);
    for (std::size_t t = 0; t < sol.steps; ++t) {
        const int a = best[t * nb + b];
        sol.actions[t] = a;
        b = next[b * na + static_cast<std::size_t>(a)];
    }
    sol.total_reward = sol.value_at(0, sol.grid.bucket_of(sol.start_soc));
    return sol;
}

} // namespace etdgrid
