#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "etdgrid/battery.hpp"
#include "etdgrid/rng.hpp"

namespace etdgrid {

// One hour of microgrid data: demand, renewable generation, price and
// carbon intensity. All values are non-negative and finite.
struct TimePoint {
    std::int64_t hour_index = 0;
    double demand_kw = 0.0;
    double res_kw = 0.0;
    double price_per_kwh = 0.0;
    double ci_kg_per_kwh = 0.0;
};

struct YearSeries {
    std::vector<TimePoint> points;
    double dt_hours = 1.0;

    std::size_t size() const { return points.size(); }
    const TimePoint& at(std::size_t i) const { return points.at(i); }
};

// Unmet power P_u = demand - renewable generation. Negative means surplus.
inline double unmet_power(const TimePoint& p) { return p.demand_kw - p.res_kw; }

namespace detail {

inline bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

inline void check_point(const TimePoint& p, std::size_t row) {
    const auto fail = [&](const char* field) {
        throw std::invalid_argument("series: " + std::string(field) + " is negative or non-finite at row " +
                                    std::to_string(row));
    };
    if (!finite_nonneg(p.demand_kw)) fail("demand_kw");
    if (!finite_nonneg(p.res_kw)) fail("res_kw");
    if (!finite_nonneg(p.price_per_kwh)) fail("price_per_kwh");
    if (!finite_nonneg(p.ci_kg_per_kwh)) fail("ci_kg_per_kwh");
}

inline double parse_double(std::string_view text, std::size_t row, const char* field) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw std::invalid_argument("series: malformed " + std::string(field) + " at row " + std::to_string(row));
    return value;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

} // namespace detail

// Checks all series invariants: non-negative finite values and hour_index
// running 0,1,2,... consecutively. Row numbers in errors are 1-based data rows.
inline void validate_series(const YearSeries& s) {
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const std::size_t row = i + 1;
        if (s.points[i].hour_index != static_cast<std::int64_t>(i))
            throw std::invalid_argument("series: non-contiguous hour_index at row " + std::to_string(row));
        detail::check_point(s.points[i], row);
    }
    if (!(s.dt_hours > 0.0)) throw std::invalid_argument("series: dt must be positive");
}

inline constexpr std::string_view kSeriesCsvHeader = "hour,demand_kw,res_kw,price_per_kwh,ci_kg_per_kwh";

// Loads a series from CSV. The header must match kSeriesCsvHeader exactly
// (UTF-8 BOM and CRLF endings are tolerated). Errors name the offending
// 1-based data row.
inline YearSeries load_csv(const std::filesystem::path& path, double dt_hours = 1.0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("series: cannot open file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("series: empty file: " + path.string());
    if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSeriesCsvHeader)
        throw std::invalid_argument("series: unexpected CSV header in " + path.string() + ": " + line);

    YearSeries out;
    out.dt_hours = dt_hours;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 5)
            throw std::invalid_argument("series: expected 5 fields at row " + std::to_string(row));
        TimePoint p;
        p.hour_index = static_cast<std::int64_t>(detail::parse_double(fields[0], row, "hour"));
        p.demand_kw = detail::parse_double(fields[1], row, "demand_kw");
        p.res_kw = detail::parse_double(fields[2], row, "res_kw");
        p.price_per_kwh = detail::parse_double(fields[3], row, "price_per_kwh");
        p.ci_kg_per_kwh = detail::parse_double(fields[4], row, "ci_kg_per_kwh");
        out.points.push_back(p);
    }
    validate_series(out);
    return out;
}

// Writes a series in the load_csv schema. Values use shortest round-trip
// formatting, so write -> load reproduces every double bit-exactly.
inline void save_csv(const YearSeries& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("series: cannot write file: " + path.string());
    out << kSeriesCsvHeader << '\n';
    for (const auto& p : s.points) {
        out << p.hour_index << ',' << detail::format_double(p.demand_kw) << ','
            << detail::format_double(p.res_kw) << ',' << detail::format_double(p.price_per_kwh) << ','
            << detail::format_double(p.ci_kg_per_kwh) << '\n';
    }
    if (!out) throw std::runtime_error("series: write failed: " + path.string());
}

// Copies points [start, start+count) into a standalone series with hour_index
// rebased to zero.
inline YearSeries slice(const YearSeries& s, std::size_t start, std::size_t count) {
    if (start + count > s.points.size()) throw std::out_of_range("series: slice out of range");
    YearSeries out;
    out.dt_hours = s.dt_hours;
    out.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        TimePoint p = s.points[start + i];
        p.hour_index = static_cast<std::int64_t>(i);
        out.points.push_back(p);
    }
    return out;
}

// Parameters of the synthetic benchmark year. Demand follows a diurnal curve
// with seeded jitter, PV follows a seasonal sun arc with per-day cloud cover,
// price and carbon intensity follow day/night trapezoids.
struct SynthConfig {
    int days = 365;
    double base_demand_kw = 800.0;
    double demand_amplitude_kw = 250.0;
    double demand_jitter_kw = 40.0;
    double pv_peak_kw = 450.0;
    int sunrise_hour = 6;
    int sunset_hour = 18; // PV is zero outside [sunrise, sunset)
    double price_night = 0.05;
    double price_day = 0.20;
    double ci_night = 0.20;
    double ci_day = 0.50;
    double dt_hours = 1.0;
};

namespace detail {

// Trapezoid profile over the hour of day: 0 before rise_start and after
// fall_end, 1 on the plateau, linear on the ramps.
inline double trapezoid(int hour, int rise_start, int rise_end, int fall_start, int fall_end) {
    if (hour < rise_start || hour >= fall_end) return 0.0;
    if (hour < rise_end)
        return static_cast<double>(hour - rise_start) / static_cast<double>(rise_end - rise_start);
    if (hour < fall_start) return 1.0;
    return static_cast<double>(fall_end - hour) / static_cast<double>(fall_end - fall_start);
}

} // namespace detail

// Deterministic synthetic year. Same (config, seed) always yields the same
// series; all values are non-negative and PV output is zero at night.
inline YearSeries synth_year(const SynthConfig& cfg, std::uint64_t seed) {
    if (!(cfg.base_demand_kw > 0.0)) throw std::invalid_argument("synth: base demand must be positive");
    if (cfg.days <= 0) throw std::invalid_argument("synth: days must be positive");
    if (!(cfg.sunrise_hour >= 0 && cfg.sunrise_hour < cfg.sunset_hour && cfg.sunset_hour <= 24))
        throw std::invalid_argument("synth: require 0 <= sunrise < sunset <= 24");

    constexpr double kTwoPi = 6.283185307179586477;
    YearSeries out;
    out.dt_hours = cfg.dt_hours;
    out.points.reserve(static_cast<std::size_t>(cfg.days) * 24);

    for (int day = 0; day < cfg.days; ++day) {
        // Season peaks mid-year (PV high, factor in [0.5, 1]); cloud cover is
        // an independent per-day factor in [0.6, 1].
        const double season = 0.75 + 0.25 * std::cos(kTwoPi * (day - 172) / 365.0);
        Rng day_rng(derive_seed(seed, 1, static_cast<std::uint64_t>(day)));
        const double cloud = 0.6 + 0.4 * day_rng.next_double();

        for (int hour = 0; hour < 24; ++hour) {
            const std::int64_t h = static_cast<std::int64_t>(day) * 24 + hour;
            TimePoint p;
            p.hour_index = h;

            // Demand: low around 04:00, peak around 16:00, plus jitter.
            const double shape = 0.5 * (1.0 - std::cos(kTwoPi * (hour - 4) / 24.0));
            const double jitter =
                cfg.demand_jitter_kw * seeded_normal(seed, 2, static_cast<std::uint64_t>(h));
            p.demand_kw = std::max(0.0, cfg.base_demand_kw + cfg.demand_amplitude_kw * shape + jitter);

            double sun = 0.0;
            if (hour >= cfg.sunrise_hour && hour < cfg.sunset_hour) {
                const double x = static_cast<double>(hour - cfg.sunrise_hour) /
                                 static_cast<double>(cfg.sunset_hour - cfg.sunrise_hour);
                sun = std::sin(3.14159265358979323846 * x);
            }
            p.res_kw = std::max(0.0, cfg.pv_peak_kw * season * cloud * sun);

            p.price_per_kwh =
                cfg.price_night + (cfg.price_day - cfg.price_night) * detail::trapezoid(hour, 6, 8, 21, 23);
            p.ci_kg_per_kwh =
                cfg.ci_night + (cfg.ci_day - cfg.ci_night) * detail::trapezoid(hour, 7, 9, 19, 22);
            out.points.push_back(p);
        }
    }
    validate_series(out);
    return out;
}

// Multiplicative Gaussian measurement noise on unmet power.
struct NoiseSpec {
    double relative_std = 0.05; // std of the relative error, in [0, 1)
    std::uint64_t seed = 0;

    void validate() const {
        if (!(relative_std >= 0.0 && relative_std < 1.0))
            throw std::invalid_argument("noise: relative_std must be in [0, 1)");
    }
};

// Replaces each unmet power u by u*(1 + eps), eps ~ N(0, relative_std^2),
// adjusting demand so that demand - res reproduces the noisy unmet power
// while res stays untouched. Noise draws are counter-based per hour, so the
// result is a pure function of (series, spec). Demand is floored at zero,
// which can only bind when a point's demand is near zero under full surplus.
inline YearSeries inject_noise(const YearSeries& s, const NoiseSpec& spec) {
    spec.validate();
    YearSeries out = s;
    if (spec.relative_std == 0.0) return out;
    for (auto& p : out.points) {
        const double u = unmet_power(p);
        const double eps = spec.relative_std * seeded_normal(spec.seed, 3, static_cast<std::uint64_t>(p.hour_index));
        p.demand_kw = std::max(0.0, p.res_kw + u * (1.0 + eps));
    }
    return out;
}

// Min/max ranges used to scale network inputs to [0, 1]. A degenerate range
// (max == min) maps the variable to the constant 0.
struct NormStats {
    double pu_min = 0.0, pu_max = 0.0;
    double pr_min = 0.0, pr_max = 0.0;
    double ci_min = 0.0, ci_max = 0.0;
    double soc_min = 0.0, soc_max = 0.0;

    static double scale(double v, double lo, double hi) {
        if (!(hi > lo)) return 0.0;
        return (v - lo) / (hi - lo);
    }
    double norm_pu(double v) const { return scale(v, pu_min, pu_max); }
    double norm_pr(double v) const { return scale(v, pr_min, pr_max); }
    double norm_ci(double v) const { return scale(v, ci_min, ci_max); }
    double norm_soc(double v) const { return scale(v, soc_min, soc_max); }
};

inline NormStats compute_norm_stats(const YearSeries& s, const BatteryParams& battery) {
    if (s.points.empty()) throw std::invalid_argument("norm stats: series is empty");
    NormStats st;
    st.pu_min = st.pu_max = unmet_power(s.points.front());
    st.pr_min = st.pr_max = s.points.front().price_per_kwh;
    st.ci_min = st.ci_max = s.points.front().ci_kg_per_kwh;
    for (const auto& p : s.points) {
        const double u = unmet_power(p);
        st.pu_min = std::min(st.pu_min, u);
        st.pu_max = std::max(st.pu_max, u);
        st.pr_min = std::min(st.pr_min, p.price_per_kwh);
        st.pr_max = std::max(st.pr_max, p.price_per_kwh);
        st.ci_min = std::min(st.ci_min, p.ci_kg_per_kwh);
        st.ci_max = std::max(st.ci_max, p.ci_kg_per_kwh);
    }
    st.soc_min = battery.soc_min_kwh;
    st.soc_max = battery.soc_max_kwh;
    return st;
}

} // namespace etdgrid
