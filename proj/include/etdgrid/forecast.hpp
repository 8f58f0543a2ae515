#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdgrid/rng.hpp"
#include "etdgrid/series.hpp"

namespace etdgrid {

// The three forecast variables: unmet power, electricity price, carbon
// intensity.
enum class Var { unmet = 0, price = 1, carbon = 2 };

// Per-variable, per-horizon mean absolute percentage errors, stored as
// fractions. Entry k (1-based horizon) lives at index k-1.
struct MpeSchedule {
    int horizon = 0;
    std::vector<double> pu, pr, ci;

    double at(Var v, int k) const {
        if (k < 1 || k > horizon) throw std::out_of_range("mpe schedule: horizon index " + std::to_string(k));
        const auto i = static_cast<std::size_t>(k - 1);
        switch (v) {
            case Var::unmet: return pu[i];
            case Var::price: return pr[i];
            case Var::carbon: return ci[i];
        }
        throw std::logic_error("mpe schedule: bad variable");
    }

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("mpe schedule: horizon must be >= 1");
        for (const auto* col : {&pu, &pr, &ci}) {
            if (col->size() != static_cast<std::size_t>(horizon))
                throw std::invalid_argument("mpe schedule: column length mismatch");
            for (double v : *col)
                if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("mpe schedule: entries must be in [0, 1)");
        }
    }
};

enum class PredictionModel { cnn_lstm, soit2fnn_mo };

// Built-in six-step error schedules for the two supported predictors,
// stored as fractions (published percentages divided by 100).
inline MpeSchedule builtin_schedule(PredictionModel model) {
    MpeSchedule s;
    s.horizon = 6;
    if (model == PredictionModel::cnn_lstm) {
        s.ci = {0.06684, 0.1425, 0.2019, 0.3387, 0.3471, 0.3852};
        s.pr = {0.09982, 0.1356, 0.1971, 0.2600, 0.3390, 0.3217};
        s.pu = {0.1426, 0.1720, 0.2055, 0.2638, 0.3215, 0.3469};
    } else {
        s.ci = {0.07847, 0.1738, 0.2732, 0.3528, 0.2732, 0.3742};
        s.pr = {0.1103, 0.1852, 0.2414, 0.2842, 0.3196, 0.3482};
        s.pu = {0.1219, 0.1912, 0.2475, 0.2788, 0.2940, 0.2976};
    }
    return s;
}

// Perfect-forecaster schedule: zero error at every horizon.
inline MpeSchedule zero_schedule(int horizon) {
    MpeSchedule s;
    s.horizon = horizon;
    s.pu.assign(static_cast<std::size_t>(horizon), 0.0);
    s.pr.assign(static_cast<std::size_t>(horizon), 0.0);
    s.ci.assign(static_cast<std::size_t>(horizon), 0.0);
    return s;
}

// Schedule override file: CSV with header `variable,step,mpe_percent`,
// variable one of p_u|pr|ci, step 1..horizon, percentages as plain numbers.
inline MpeSchedule load_schedule_csv(const std::filesystem::path& path, int horizon) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("schedule: cannot open file: " + path.string());
    MpeSchedule s = zero_schedule(horizon);
    std::vector<std::vector<bool>> seen(3, std::vector<bool>(static_cast<std::size_t>(horizon), false));

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("schedule: empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "variable,step,mpe_percent")
        throw std::invalid_argument("schedule: unexpected header: " + line);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw std::invalid_argument("schedule: expected 3 fields at row " + std::to_string(row));
        const std::string var(fields[0]);
        const int step = static_cast<int>(detail::parse_double(fields[1], row, "step"));
        const double frac = detail::parse_double(fields[2], row, "mpe_percent") / 100.0;
        if (step < 1 || step > horizon)
            throw std::invalid_argument("schedule: step out of range at row " + std::to_string(row));
        const auto i = static_cast<std::size_t>(step - 1);
        if (var == "p_u") { s.pu[i] = frac; seen[0][i] = true; }
        else if (var == "pr") { s.pr[i] = frac; seen[1][i] = true; }
        else if (var == "ci") { s.ci[i] = frac; seen[2][i] = true; }
        else throw std::invalid_argument("schedule: unknown variable at row " + std::to_string(row) + ": " + var);
    }
    for (const auto& col : seen)
        for (bool b : col)
            if (!b) throw std::invalid_argument("schedule: missing entries; need all of p_u/pr/ci x 1.." +
                                                std::to_string(horizon));
    s.validate();
    return s;
}

// Multiplicative-noise std that realizes a target mean absolute percentage
// error: E|N(0, sigma^2)| = sigma*sqrt(2/pi), so sigma = mpe*sqrt(pi/2).
inline double calibrate_sigma(double mpe) {
    if (!(mpe >= 0.0 && mpe < 1.0)) throw std::invalid_argument("calibrate_sigma: mpe must be in [0, 1)");
    return mpe * std::sqrt(1.57079632679489661923); // pi/2
}

// Multi-step forecasts for every origin hour. Horizon 0 is by definition the
// measured value and is read from the series; horizons 1..T are stored here.
class ForecastBundle {
  public:
    ForecastBundle(int horizon, std::size_t origins)
        : horizon_(horizon), origins_(origins),
          pu_(origins * static_cast<std::size_t>(horizon)),
          pr_(origins * static_cast<std::size_t>(horizon)),
          ci_(origins * static_cast<std::size_t>(horizon)) {}

    int horizon() const { return horizon_; }
    std::size_t origins() const { return origins_; }

    double at(Var v, std::size_t t, int k) const {
        switch (v) {
            case Var::unmet: return pu_[index(t, k)];
            case Var::price: return pr_[index(t, k)];
            case Var::carbon: return ci_[index(t, k)];
        }
        throw std::logic_error("forecast bundle: bad variable");
    }

    void set(Var v, std::size_t t, int k, double value) {
        switch (v) {
            case Var::unmet: pu_[index(t, k)] = value; return;
            case Var::price: pr_[index(t, k)] = value; return;
            case Var::carbon: ci_[index(t, k)] = value; return;
        }
        throw std::logic_error("forecast bundle: bad variable");
    }

  private:
    std::size_t index(std::size_t t, int k) const {
        if (t >= origins_) throw std::out_of_range("forecast bundle: origin out of range");
        if (k < 1 || k > horizon_) throw std::out_of_range("forecast bundle: horizon out of range");
        return t * static_cast<std::size_t>(horizon_) + static_cast<std::size_t>(k - 1);
    }

    int horizon_;
    std::size_t origins_;
    std::vector<double> pu_, pr_, ci_;
};

// Synthetic predictor: forecast(t, v, k) = actual(t+k, v) * (1 + eps) with
// eps ~ N(0, calibrate_sigma(mpe[v][k])^2). Noise is seeded per (t, v, k),
// so generation is order-independent and reproducible. Price and carbon
// forecasts are floored at zero; unmet power may change sign.
inline ForecastBundle generate_forecasts(const YearSeries& series, const MpeSchedule& schedule,
                                         std::uint64_t seed) {
    schedule.validate();
    const int T = schedule.horizon;
    if (series.size() <= static_cast<std::size_t>(T))
        throw std::invalid_argument("forecasts: series shorter than horizon");
    const std::size_t origins = series.size() - static_cast<std::size_t>(T);

    ForecastBundle bundle(T, origins);
    for (std::size_t t = 0; t < origins; ++t) {
        for (int k = 1; k <= T; ++k) {
            const TimePoint& target = series.points[t + static_cast<std::size_t>(k)];
            for (Var v : {Var::unmet, Var::price, Var::carbon}) {
                const double sigma = calibrate_sigma(schedule.at(v, k));
                double eps = 0.0;
                if (sigma > 0.0)
                    eps = sigma * seeded_normal(seed, static_cast<std::uint64_t>(v),
                                                static_cast<std::uint64_t>(k), t);
                double value = 0.0;
                switch (v) {
                    case Var::unmet: value = unmet_power(target) * (1.0 + eps); break;
                    case Var::price: value = std::max(0.0, target.price_per_kwh * (1.0 + eps)); break;
                    case Var::carbon: value = std::max(0.0, target.ci_kg_per_kwh * (1.0 + eps)); break;
                }
                bundle.set(v, t, k, value);
            }
        }
    }
    return bundle;
}

// Realized mean absolute percentage error of a bundle against the series it
// was built from. Denominators are floored at 1% of the variable's mean
// absolute value over the series, guarding actuals near zero.
inline MpeSchedule measure_mpe(const ForecastBundle& bundle, const YearSeries& series) {
    const int T = bundle.horizon();
    if (bundle.origins() == 0 || series.size() < bundle.origins() + static_cast<std::size_t>(T))
        throw std::invalid_argument("measure_mpe: bundle/series misaligned or empty");

    double mean_abs[3] = {0.0, 0.0, 0.0};
    for (const auto& p : series.points) {
        mean_abs[0] += std::abs(unmet_power(p));
        mean_abs[1] += std::abs(p.price_per_kwh);
        mean_abs[2] += std::abs(p.ci_kg_per_kwh);
    }
    double floor[3];
    for (int v = 0; v < 3; ++v) floor[v] = 0.01 * mean_abs[v] / static_cast<double>(series.size());

    MpeSchedule out = zero_schedule(T);
    for (int k = 1; k <= T; ++k) {
        double sum[3] = {0.0, 0.0, 0.0};
        for (std::size_t t = 0; t < bundle.origins(); ++t) {
            const TimePoint& target = series.points[t + static_cast<std::size_t>(k)];
            const double actual[3] = {unmet_power(target), target.price_per_kwh, target.ci_kg_per_kwh};
            for (int v = 0; v < 3; ++v) {
                const double predicted = bundle.at(static_cast<Var>(v), t, k);
                const double denom = std::max(std::abs(actual[v]), floor[v]);
                sum[v] += denom > 0.0 ? std::abs(predicted - actual[v]) / denom : 0.0;
            }
        }
        const auto i = static_cast<std::size_t>(k - 1);
        out.pu[i] = sum[0] / static_cast<double>(bundle.origins());
        out.pr[i] = sum[1] / static_cast<double>(bundle.origins());
        out.ci[i] = sum[2] / static_cast<double>(bundle.origins());
    }
    return out;
}

// How much each forecast variable contributes to the reward. Unmet power
// drives both cost and emissions (weight (1+a)/(2+2a) = 1/2), price drives
// cost only (1/(2+2a)), carbon intensity drives emissions only (a/(2+2a)).
// swap_price_carbon exchanges the price/carbon weights for sensitivity runs.
struct ContributionWeights {
    double w_u = 0.0, w_pr = 0.0, w_ci = 0.0;
};

inline ContributionWeights contribution_weights(double alpha, bool swap_price_carbon = false) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("contribution_weights: alpha must be >= 0");
    ContributionWeights w;
    const double denom = 2.0 + 2.0 * alpha;
    w.w_u = (1.0 + alpha) / denom;
    w.w_pr = 1.0 / denom;
    w.w_ci = alpha / denom;
    if (swap_price_carbon) std::swap(w.w_pr, w.w_ci);
    return w;
}

// Combined prediction uncertainty at horizon k: the contribution-weighted
// average of the per-variable errors.
inline double combined_uncertainty(const ContributionWeights& w, const MpeSchedule& schedule, int k) {
    if (k < 1 || k > schedule.horizon)
        throw std::out_of_range("combined_uncertainty: horizon index " + std::to_string(k));
    return w.w_u * schedule.at(Var::unmet, k) + w.w_pr * schedule.at(Var::price, k) +
           w.w_ci * schedule.at(Var::carbon, k);
}

// Center of the admissible range [1, 1/(1-P_e)] for the error-discount
// adjustment factor.
inline double gamma_p(double p_e) {
    if (!(p_e >= 0.0 && p_e < 1.0)) throw std::invalid_argument("gamma_p: P_e must be in [0, 1)");
    return (2.0 - p_e) / (2.0 * (1.0 - p_e));
}

// Error discount factor: 1 for k <= 0 (current measurements carry no
// prediction error), (2 - P_e)/2 for k >= 1. Equals (1 - P_e)*gamma_p(P_e).
inline double error_discount(double p_e, int k) {
    if (!(p_e >= 0.0 && p_e < 1.0)) throw std::invalid_argument("error_discount: P_e must be in [0, 1)");
    if (k <= 0) return 1.0;
    return (2.0 - p_e) / 2.0;
}

// gamma_prime[k] for k = 0..T; entry 0 is always 1.
struct ErrorDiscountSchedule {
    std::vector<double> gamma_prime;

    int horizon() const { return static_cast<int>(gamma_prime.size()) - 1; }
    double at(int k) const {
        if (k <= 0) return 1.0;
        return gamma_prime.at(static_cast<std::size_t>(k));
    }
};

inline ErrorDiscountSchedule discount_schedule(const ContributionWeights& w, const MpeSchedule& schedule) {
    schedule.validate();
    ErrorDiscountSchedule out;
    out.gamma_prime.resize(static_cast<std::size_t>(schedule.horizon) + 1);
    out.gamma_prime[0] = 1.0;
    for (int k = 1; k <= schedule.horizon; ++k)
        out.gamma_prime[static_cast<std::size_t>(k)] = error_discount(combined_uncertainty(w, schedule, k), k);
    return out;
}

} // namespace etdgrid
