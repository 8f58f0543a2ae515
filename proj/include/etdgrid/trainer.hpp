#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdgrid/checkpoint.hpp"
#include "etdgrid/env.hpp"
#include "etdgrid/forecast.hpp"
#include "etdgrid/qlearn.hpp"
#include "etdgrid/replay.hpp"
#include "etdgrid/rng.hpp"
#include "etdgrid/series.hpp"

namespace etdgrid {

// State futures come either from the synthetic forecaster or from the true
// future values (the "trained on actual data" comparison arm).
enum class ForecastSource { actual_as_prediction, synthetic_schedule };

// Episode-start state of charge: the floor, or uniform over the whole band.
enum class SocInit { floor, uniform };

// Derivation tags for the independent RNG streams of a run. Everything a
// run draws is reachable from (seed, tag), so replacing one stream never
// shifts another.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamWindow = 2;
inline constexpr std::uint64_t kStreamAction = 3;
inline constexpr std::uint64_t kStreamReplay = 4;
inline constexpr std::uint64_t kStreamTrainForecast = 5;
inline constexpr std::uint64_t kStreamTestForecast = 6;

struct TrainConfig {
    double gamma = 0.99;
    double lr = 1e-4;
    int episodes = 5000;
    int episode_length = 168; // steps per episode
    int horizon = 6;          // forecast steps in the state
    double epsilon = 0.1;
    int batch_size = 64;
    double alpha = 0.25; // emission weight in the reward
    int target_sync_steps = 200;
    int buffer_capacity = 10000;
    int warmup_transitions = 500;
    std::uint64_t seed = 1;
    UpdateMode mode = UpdateMode::etd;
    ForecastSource forecast_source = ForecastSource::synthetic_schedule;
    SocInit soc_init = SocInit::floor;
    bool swap_price_carbon = false;
    BatteryParams battery;

    void validate(std::size_t series_length) const {
        battery.validate();
        if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("config: gamma must be in (0, 1]");
        if (!(lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
        if (episodes < 1) throw std::invalid_argument("config: episodes must be >= 1");
        if (episode_length < 1) throw std::invalid_argument("config: episode_length must be >= 1");
        if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw std::invalid_argument("config: epsilon must be in [0, 1]");
        if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
        if (!(alpha >= 0.0)) throw std::invalid_argument("config: alpha must be >= 0");
        if (target_sync_steps < 1) throw std::invalid_argument("config: target_sync_steps must be >= 1");
        if (buffer_capacity < 1) throw std::invalid_argument("config: buffer_capacity must be >= 1");
        if (warmup_transitions < 1) throw std::invalid_argument("config: warmup_transitions must be >= 1");
        if (series_length < static_cast<std::size_t>(episode_length + horizon))
            throw std::invalid_argument("config: series shorter than episode_length + horizon");
    }
};

// Forecasts a run trains or evaluates against. The actual-as-prediction arm
// is the zero-error schedule applied to the same machinery, so state
// construction is identical in both arms.
inline ForecastBundle make_forecasts(const YearSeries& series, const TrainConfig& config,
                                     const MpeSchedule& schedule, std::uint64_t stream_tag) {
    if (config.forecast_source == ForecastSource::actual_as_prediction)
        return generate_forecasts(series, zero_schedule(config.horizon), 0);
    return generate_forecasts(series, schedule, derive_seed(config.seed, stream_tag));
}

// gamma_prime_1 stored with every transition: from the declared schedule in
// ETD mode (even when training on actuals, matching the four-way comparison
// design), exactly 1 in TD mode.
inline double transition_gamma_prime_1(const TrainConfig& config, const MpeSchedule& schedule) {
    if (config.mode == UpdateMode::td) return 1.0;
    const auto weights = contribution_weights(config.alpha, config.swap_price_carbon);
    return discount_schedule(weights, schedule).at(1);
}

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> episode_rewards;
    std::vector<double> episode_losses; // mean per-update loss; 0 before warmup
};

// N_m episodes of: sample a window start uniformly, reset SOC to the floor,
// then K steps of act/step/store/update with target syncs on a fixed step
// cadence. Deterministic for a fixed config.
inline TrainResult train(const TrainConfig& config, const YearSeries& series,
                         const MpeSchedule& schedule) {
    config.validate(series.size());
    schedule.validate();
    if (schedule.horizon != config.horizon)
        throw std::invalid_argument("train: schedule horizon differs from config horizon");

    const ForecastBundle forecasts = make_forecasts(series, config, schedule, kStreamTrainForecast);
    const NormStats norm = compute_norm_stats(series, config.battery);
    const double g1 = transition_gamma_prime_1(config, schedule);

    const std::size_t origins = forecasts.origins();
    if (origins < static_cast<std::size_t>(config.episode_length))
        throw std::invalid_argument("train: series shorter than episode_length + horizon");
    const std::size_t valid_starts = origins - static_cast<std::size_t>(config.episode_length) + 1;

    Rng init_rng(derive_seed(config.seed, kStreamInit));
    Rng window_rng(derive_seed(config.seed, kStreamWindow));
    Rng action_rng(derive_seed(config.seed, kStreamAction));
    Rng replay_rng(derive_seed(config.seed, kStreamReplay));

    TrainResult result;
    Checkpoint& cp = result.checkpoint;
    cp.net = make_mlp(q_network_sizes(static_cast<int>(state_size(config.horizon)), kActionCount),
                      init_rng);
    cp.target_net = sync_target(cp.net);
    cp.adam.resize_for(cp.net);
    cp.battery = config.battery;
    cp.alpha = config.alpha;
    cp.gamma = config.gamma;
    cp.horizon = config.horizon;
    cp.norm = norm;

    ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
    TrainScratch scratch;
    Activations act_scratch;
    result.episode_rewards.reserve(static_cast<std::size_t>(config.episodes));
    result.episode_losses.reserve(static_cast<std::size_t>(config.episodes));

    for (int episode = 0; episode < config.episodes; ++episode) {
        const std::size_t t0 = window_rng.next_below(static_cast<std::uint32_t>(valid_starts));
        BatteryState battery{config.battery.soc_min_kwh};
        if (config.soc_init == SocInit::uniform)
            battery.soc_kwh += window_rng.next_double() *
                               (config.battery.soc_max_kwh - config.battery.soc_min_kwh);
        double episode_reward = 0.0;
        double episode_loss = 0.0;
        std::size_t updates = 0;

        for (int j = 0; j < config.episode_length; ++j) {
            const std::size_t t = t0 + static_cast<std::size_t>(j);
            const bool terminal = (j + 1 == config.episode_length);

            ReplayTransition tr;
            tr.state = build_state(series, forecasts, t, battery.soc_kwh, norm);
            tr.action_index = select_action(cp.net, tr.state, config.epsilon, action_rng, act_scratch);
            const StepOutcome step =
                env_step(series, t, battery, tr.action_index, config.battery, config.alpha);
            tr.reward = step.rew.value;
            tr.terminal = terminal;
            if (!terminal)
                tr.next_state = build_state(series, forecasts, t + 1, step.next_battery.soc_kwh, norm);
            tr.gamma_prime_1 = g1;
            buffer.push(std::move(tr));

            battery = step.next_battery;
            episode_reward += step.rew.value;

            if (buffer.size() >= static_cast<std::size_t>(config.warmup_transitions)) {
                const auto batch = buffer.sample(static_cast<std::size_t>(config.batch_size), replay_rng);
                episode_loss += train_batch(cp.net, cp.target_net, cp.adam, batch, config.gamma,
                                            config.lr, config.mode, scratch);
                ++updates;
                cp.train_steps += 1;
                if (cp.train_steps % static_cast<std::uint64_t>(config.target_sync_steps) == 0)
                    cp.target_net = sync_target(cp.net);
            }
        }

        cp.episodes_done += 1;
        result.episode_rewards.push_back(episode_reward);
        result.episode_losses.push_back(updates > 0 ? episode_loss / static_cast<double>(updates) : 0.0);
    }

    cp.window_rng = window_rng.state();
    cp.action_rng = action_rng.state();
    cp.replay_rng = replay_rng.state();
    return result;
}

// One evaluated step of a greedy rollout.
struct TraceRow {
    long long hour = 0;
    double p_u = 0.0;
    double price = 0.0;
    double ci = 0.0;
    int action = 0;
    double p_b = 0.0;
    double soc_kwh = 0.0; // state of charge after the step
    double p_g = 0.0;
    double p_c = 0.0;
    double reward = 0.0;
    double cost_delta = 0.0;
    double emission_delta_kg = 0.0;
};

struct EvalReport {
    double acr = 0.0;                 // sum of per-step rewards
    double cost_reduction = 0.0;      // currency over the series
    double emission_reduction_t = 0.0; // tonnes CO2 over the series
    std::vector<TraceRow> trace;
};

// Greedy (epsilon = 0) rollout over forecast origins [start, start+count),
// starting from the SOC floor, no terminals. Deterministic. The defaults
// cover every origin of the series.
inline EvalReport evaluate(const Mlp& net, const YearSeries& series, const ForecastBundle& forecasts,
                           const BatteryParams& battery_params, double alpha, const NormStats& norm,
                           std::size_t start = 0, std::size_t count = SIZE_MAX) {
    if (start >= forecasts.origins())
        throw std::out_of_range("evaluate: start beyond the last forecast origin");
    const std::size_t stop = count > forecasts.origins() - start ? forecasts.origins() : start + count;

    EvalReport report;
    report.trace.reserve(stop - start);
    BatteryState battery{battery_params.soc_min_kwh};
    Activations acts;
    double emission_kg = 0.0;

    for (std::size_t t = start; t < stop; ++t) {
        const StateVector state = build_state(series, forecasts, t, battery.soc_kwh, norm);
        const int action = argmax_q(forward(net, state, acts));
        const StepOutcome step = env_step(series, t, battery, action, battery_params, alpha);

        TraceRow row;
        row.hour = series.points[t].hour_index;
        row.p_u = unmet_power(series.points[t]);
        row.price = series.points[t].price_per_kwh;
        row.ci = series.points[t].ci_kg_per_kwh;
        row.action = action;
        row.p_b = step.p_b;
        row.soc_kwh = step.next_battery.soc_kwh;
        row.p_g = step.p_g;
        row.p_c = step.p_c;
        row.reward = step.rew.value;
        row.cost_delta = step.rew.cost_delta;
        row.emission_delta_kg = step.rew.emission_delta;
        report.trace.push_back(row);

        report.acr += step.rew.value;
        report.cost_reduction += step.rew.cost_delta;
        emission_kg += step.rew.emission_delta;
        battery = step.next_battery;
    }
    report.emission_reduction_t = emission_kg / 1000.0;
    return report;
}

// Greedy rollout reward of a checkpointed policy on a series, forecasts
// included; convenience over evaluate().
inline double policy_acr(const Checkpoint& cp, const YearSeries& series, const ForecastBundle& forecasts) {
    return evaluate(cp.net, series, forecasts, cp.battery, cp.alpha, cp.norm).acr;
}

inline constexpr const char* kCurveCsvHeader = "episode,reward,reward_mean100";
inline constexpr const char* kTraceCsvHeader =
    "hour,p_u_kw,price_per_kwh,ci_kg_per_kwh,action,p_b_kw,soc_kwh,p_g_kw,p_c_kw,reward,"
    "cost_delta,emission_delta_kg";

// Learning curve CSV; the trailing-100 mean column is cosmetic smoothing
// for plots.
inline void save_curve_csv(const std::filesystem::path& path, const std::vector<double>& rewards) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("curve: cannot write: " + path.string());
    out << kCurveCsvHeader << '\n';
    double window_sum = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        window_sum += rewards[i];
        if (i >= 100) window_sum -= rewards[i - 100];
        const double mean = window_sum / static_cast<double>(std::min<std::size_t>(i + 1, 100));
        out << (i + 1) << ',' << detail::format_double(rewards[i]) << ','
            << detail::format_double(mean) << '\n';
    }
    if (!out) throw std::runtime_error("curve: write failed: " + path.string());
}

inline std::vector<double> load_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("curve: cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("curve: empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCurveCsvHeader) throw std::runtime_error("curve: unexpected header: " + line);
    std::vector<double> rewards;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3) throw std::runtime_error("curve: expected 3 fields at row " + std::to_string(row));
        rewards.push_back(detail::parse_double(fields[1], row, "reward"));
    }
    return rewards;
}

inline void save_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("trace: cannot write: " + path.string());
    out << kTraceCsvHeader << '\n';
    for (const TraceRow& r : trace) {
        out << r.hour << ',' << detail::format_double(r.p_u) << ',' << detail::format_double(r.price)
            << ',' << detail::format_double(r.ci) << ',' << r.action << ','
            << detail::format_double(r.p_b) << ',' << detail::format_double(r.soc_kwh) << ','
            << detail::format_double(r.p_g) << ',' << detail::format_double(r.p_c) << ','
            << detail::format_double(r.reward) << ',' << detail::format_double(r.cost_delta) << ','
            << detail::format_double(r.emission_delta_kg) << '\n';
    }
    if (!out) throw std::runtime_error("trace: write failed: " + path.string());
}

inline std::vector<TraceRow> load_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("trace: cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace: empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceCsvHeader) throw std::runtime_error("trace: unexpected header: " + line);
    std::vector<TraceRow> trace;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 12) throw std::runtime_error("trace: expected 12 fields at row " + std::to_string(row));
        TraceRow r;
        r.hour = static_cast<long long>(detail::parse_double(f[0], row, "hour"));
        r.p_u = detail::parse_double(f[1], row, "p_u_kw");
        r.price = detail::parse_double(f[2], row, "price_per_kwh");
        r.ci = detail::parse_double(f[3], row, "ci_kg_per_kwh");
        r.action = static_cast<int>(detail::parse_double(f[4], row, "action"));
        r.p_b = detail::parse_double(f[5], row, "p_b_kw");
        r.soc_kwh = detail::parse_double(f[6], row, "soc_kwh");
        r.p_g = detail::parse_double(f[7], row, "p_g_kw");
        r.p_c = detail::parse_double(f[8], row, "p_c_kw");
        r.reward = detail::parse_double(f[9], row, "reward");
        r.cost_delta = detail::parse_double(f[10], row, "cost_delta");
        r.emission_delta_kg = detail::parse_double(f[11], row, "emission_delta_kg");
        trace.push_back(r);
    }
    return trace;
}

} // namespace etdgrid
