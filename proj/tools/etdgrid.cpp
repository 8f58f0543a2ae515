// Command-line front end: synthesize benchmark data, train TD/ETD policies,
// evaluate checkpoints, trace a simulated week, and compare update modes.
// Exit codes: 0 success, 1 runtime/numeric failure, 2 usage/config error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "etdgrid/etdgrid.hpp"

namespace fs = std::filesystem;
using namespace etdgrid;

namespace {

// Seed-stream tags owned by the CLI (library streams are 1..6).
constexpr std::uint64_t kStreamSynthTrain = 20;
constexpr std::uint64_t kStreamSynthTest = 21;
constexpr std::uint64_t kStreamNoiseTrain = 22;
constexpr std::uint64_t kStreamNoiseTest = 23;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path))
        throw UsageError(std::string(what) + " not found: " + path);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Flat key=value config support. CLI11's own config hook never fires on
// subcommands, so the file is expanded into --key=value tokens ahead of the
// user's arguments; any key also given on the command line is dropped from
// the expansion, which is exactly the documented flag-over-file precedence.
std::vector<std::string> apply_config_file(const CLI::App* sub, const std::string& sub_name,
                                           const std::vector<std::string>& user_args,
                                           const std::string& config_path) {
    require_file(config_path, "config file");
    std::ifstream in(config_path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw UsageError("config: missing '=' at line " + std::to_string(lineno) + " of " +
                             config_path);
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty())
            throw UsageError("config: empty key at line " + std::to_string(lineno) + " of " +
                             config_path);
        if (key == "config" || key == "out")
            throw UsageError("config: key '" + key + "' must be given on the command line");
        if (sub->get_option_no_throw("--" + key) == nullptr)
            throw UsageError("config: unknown key '" + key + "' for command '" + sub_name + "'");
        entries.emplace_back(key, value);
    }

    auto given_on_cli = [&](const std::string& key) {
        const std::string flag = "--" + key;
        for (const auto& a : user_args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };

    std::vector<std::string> args;
    args.push_back(sub_name);
    for (const auto& [key, value] : entries)
        if (!given_on_cli(key)) args.push_back("--" + key + "=" + value);
    args.insert(args.end(), user_args.begin(), user_args.end());
    return args;
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

MpeSchedule resolve_schedule(const std::string& name, int horizon) {
    if (name == "cnn-lstm" || name == "soit2fnn") {
        if (horizon != 6)
            throw UsageError("schedule " + name + " is defined for horizon 6, got " +
                             std::to_string(horizon));
        return builtin_schedule(name == "cnn-lstm" ? PredictionModel::cnn_lstm
                                                   : PredictionModel::soit2fnn_mo);
    }
    if (name == "zero") return zero_schedule(horizon);
    if (name.rfind("file:", 0) == 0) {
        const std::string path = name.substr(5);
        require_file(path, "schedule file");
        return load_schedule_csv(path, horizon);
    }
    throw UsageError("unknown schedule: " + name + " (expected cnn-lstm, soit2fnn, zero, or file:PATH)");
}

// Options shared by train and compare.
struct TrainCliOpts {
    TrainConfig config;
    std::string mode = "etd";
    std::string forecast_source = "predicted";
    std::string schedule = "soit2fnn";
    std::string soc_init = "min";
    bool fast = false;
};

void add_train_options(CLI::App* cmd, TrainCliOpts& o) {
    cmd->add_option("--gamma", o.config.gamma, "Discount factor")->capture_default_str();
    cmd->add_option("--lr", o.config.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--episodes", o.config.episodes, "Training episodes")->capture_default_str();
    cmd->add_option("--episode-length", o.config.episode_length, "Steps per episode")
        ->capture_default_str();
    cmd->add_option("--horizon", o.config.horizon, "Forecast steps in the state")
        ->capture_default_str();
    cmd->add_option("--epsilon", o.config.epsilon, "Exploration rate")->capture_default_str();
    cmd->add_option("--batch-size", o.config.batch_size, "Replay batch size")->capture_default_str();
    cmd->add_option("--alpha", o.config.alpha, "Emission weight in the reward")->capture_default_str();
    cmd->add_option("--target-sync", o.config.target_sync_steps, "Gradient steps between target syncs")
        ->capture_default_str();
    cmd->add_option("--buffer-capacity", o.config.buffer_capacity, "Replay buffer capacity")
        ->capture_default_str();
    cmd->add_option("--warmup", o.config.warmup_transitions, "Stored transitions before updates start")
        ->capture_default_str();
    cmd->add_option("--seed", o.config.seed, "Run seed")->capture_default_str();
    cmd->add_option("--mode", o.mode, "Update rule")
        ->check(CLI::IsMember({"td", "etd"}))
        ->capture_default_str();
    cmd->add_option("--forecast-source", o.forecast_source,
                    "State futures: schedule-noised predictions or true values")
        ->check(CLI::IsMember({"predicted", "actual"}))
        ->capture_default_str();
    cmd->add_option("--soc-init", o.soc_init, "Episode-start SOC: the floor or uniform random")
        ->check(CLI::IsMember({"min", "random"}))
        ->capture_default_str();
    cmd->add_flag("--swap-price-carbon", o.config.swap_price_carbon,
                  "Exchange the price/carbon contribution weights");
    cmd->add_option("--schedule", o.schedule, "Error schedule: cnn-lstm, soit2fnn, zero, or file:PATH")
        ->capture_default_str();
    cmd->add_flag("--fast", o.fast, "Short profile: 500 episodes");
    cmd->add_option("--battery-capacity", o.config.battery.capacity_kwh, "Battery capacity, kWh")
        ->capture_default_str();
    cmd->add_option("--soc-min", o.config.battery.soc_min_kwh, "SOC floor, kWh")->capture_default_str();
    cmd->add_option("--soc-max", o.config.battery.soc_max_kwh, "SOC ceiling, kWh")
        ->capture_default_str();
    cmd->add_option("--eta", o.config.battery.eta, "One-way charge/discharge efficiency")
        ->capture_default_str();
    cmd->add_option("--e-max", o.config.battery.e_max_kwh, "Max energy moved per step, kWh")
        ->capture_default_str();
    cmd->add_option("--dt", o.config.battery.dt_hours, "Step length, hours")->capture_default_str();
}

// Applies shortcuts and string options onto the config; returns the
// resolved schedule.
MpeSchedule finalize_train_options(TrainCliOpts& o, bool warn_td_schedule) {
    if (o.fast) o.config.episodes = 500;
    o.config.mode = o.mode == "td" ? UpdateMode::td : UpdateMode::etd;
    o.config.forecast_source = o.forecast_source == "actual" ? ForecastSource::actual_as_prediction
                                                             : ForecastSource::synthetic_schedule;
    o.config.soc_init = o.soc_init == "random" ? SocInit::uniform : SocInit::floor;
    if (warn_td_schedule && o.config.mode == UpdateMode::td)
        std::cerr << "warning: mode td ignores the error-discount schedule; it still shapes "
                     "forecast noise when --forecast-source=predicted\n";
    return resolve_schedule(o.schedule, o.config.horizon);
}

// The resolved key=value snapshot a manifest records; keys are the long
// option names, so the snapshot is a valid --config file body.
nlohmann::ordered_json train_config_snapshot(const TrainCliOpts& o, const std::string& data) {
    nlohmann::ordered_json c;
    c["data"] = data;
    c["gamma"] = detail::format_double(o.config.gamma);
    c["lr"] = detail::format_double(o.config.lr);
    c["episodes"] = std::to_string(o.config.episodes);
    c["episode-length"] = std::to_string(o.config.episode_length);
    c["horizon"] = std::to_string(o.config.horizon);
    c["epsilon"] = detail::format_double(o.config.epsilon);
    c["batch-size"] = std::to_string(o.config.batch_size);
    c["alpha"] = detail::format_double(o.config.alpha);
    c["target-sync"] = std::to_string(o.config.target_sync_steps);
    c["buffer-capacity"] = std::to_string(o.config.buffer_capacity);
    c["warmup"] = std::to_string(o.config.warmup_transitions);
    c["seed"] = std::to_string(o.config.seed);
    c["mode"] = o.mode;
    c["forecast-source"] = o.forecast_source;
    c["soc-init"] = o.soc_init;
    c["swap-price-carbon"] = o.config.swap_price_carbon ? "true" : "false";
    c["schedule"] = o.schedule;
    c["battery-capacity"] = detail::format_double(o.config.battery.capacity_kwh);
    c["soc-min"] = detail::format_double(o.config.battery.soc_min_kwh);
    c["soc-max"] = detail::format_double(o.config.battery.soc_max_kwh);
    c["eta"] = detail::format_double(o.config.battery.eta);
    c["e-max"] = detail::format_double(o.config.battery.e_max_kwh);
    c["dt"] = detail::format_double(o.config.battery.dt_hours);
    return c;
}

void add_schedule_input(RunManifest& manifest, const std::string& schedule) {
    if (schedule.rfind("file:", 0) == 0) manifest.add_input(schedule.substr(5));
}

int run_synth(const std::string& out, std::uint64_t seed, SynthConfig cfg, double noise_std) {
    const fs::path dir = ensure_out_dir(out);
    const YearSeries train_base = synth_year(cfg, derive_seed(seed, kStreamSynthTrain));
    const YearSeries test_base = synth_year(cfg, derive_seed(seed, kStreamSynthTest));
    const YearSeries train =
        inject_noise(train_base, NoiseSpec{noise_std, derive_seed(seed, kStreamNoiseTrain)});
    const YearSeries test =
        inject_noise(test_base, NoiseSpec{noise_std, derive_seed(seed, kStreamNoiseTest)});
    save_csv(train, dir / "train.csv");
    save_csv(test, dir / "test.csv");

    RunManifest manifest;
    manifest.command = "synth";
    auto& c = manifest.config;
    c["seed"] = std::to_string(seed);
    c["days"] = std::to_string(cfg.days);
    c["base-demand"] = detail::format_double(cfg.base_demand_kw);
    c["demand-amplitude"] = detail::format_double(cfg.demand_amplitude_kw);
    c["demand-jitter"] = detail::format_double(cfg.demand_jitter_kw);
    c["pv-peak"] = detail::format_double(cfg.pv_peak_kw);
    c["sunrise"] = detail::format_double(cfg.sunrise_hour);
    c["sunset"] = detail::format_double(cfg.sunset_hour);
    c["price-night"] = detail::format_double(cfg.price_night);
    c["price-day"] = detail::format_double(cfg.price_day);
    c["ci-night"] = detail::format_double(cfg.ci_night);
    c["ci-day"] = detail::format_double(cfg.ci_day);
    c["noise-std"] = detail::format_double(noise_std);
    c["dt"] = detail::format_double(cfg.dt_hours);
    manifest.add_output(dir, dir / "train.csv");
    manifest.add_output(dir, dir / "test.csv");
    save_manifest(dir / "manifest.json", manifest);

    std::cout << "wrote " << (dir / "train.csv").string() << " and " << (dir / "test.csv").string()
              << " (" << train.size() << " rows each)\n";
    return 0;
}

int run_train(TrainCliOpts& opts, const std::string& data, const std::string& out) {
    require_file(data, "data file");
    const MpeSchedule schedule = finalize_train_options(opts, true);
    const YearSeries series = load_csv(data, opts.config.battery.dt_hours);
    const fs::path dir = ensure_out_dir(out);

    const TrainResult result = train(opts.config, series, schedule);
    save_checkpoint(dir / "checkpoint.bin", result.checkpoint);
    save_curve_csv(dir / "curve.csv", result.episode_rewards);

    RunManifest manifest;
    manifest.command = "train";
    manifest.config = train_config_snapshot(opts, data);
    manifest.add_input(data);
    add_schedule_input(manifest, opts.schedule);
    manifest.add_output(dir, dir / "checkpoint.bin");
    manifest.add_output(dir, dir / "curve.csv");
    save_manifest(dir / "manifest.json", manifest);

    double last100 = 0.0;
    const std::size_t n = result.episode_rewards.size();
    const std::size_t tail = n < 100 ? n : 100;
    for (std::size_t i = n - tail; i < n; ++i) last100 += result.episode_rewards[i];
    std::cout << "episodes " << n << "\n"
              << "mean_reward_last100 " << detail::format_double(last100 / static_cast<double>(tail))
              << "\n"
              << "checkpoint " << (dir / "checkpoint.bin").string() << "\n";
    return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data, const std::string& out,
             const std::string& schedule_name, std::uint64_t seed) {
    require_file(checkpoint_path, "checkpoint");
    require_file(data, "data file");
    const Checkpoint cp = load_checkpoint(checkpoint_path);
    const MpeSchedule schedule = resolve_schedule(schedule_name, cp.horizon);
    const YearSeries series = load_csv(data, cp.battery.dt_hours);
    const ForecastBundle forecasts =
        generate_forecasts(series, schedule, derive_seed(seed, kStreamTestForecast));
    const fs::path dir = ensure_out_dir(out);

    const EvalReport report = evaluate(cp.net, series, forecasts, cp.battery, cp.alpha, cp.norm);
    save_trace_csv(dir / "trace.csv", report.trace);

    RunManifest manifest;
    manifest.command = "eval";
    auto& c = manifest.config;
    c["checkpoint"] = checkpoint_path;
    c["data"] = data;
    c["schedule"] = schedule_name;
    c["seed"] = std::to_string(seed);
    manifest.add_input(checkpoint_path);
    manifest.add_input(data);
    add_schedule_input(manifest, schedule_name);
    manifest.add_output(dir, dir / "trace.csv");
    save_manifest(dir / "manifest.json", manifest);

    std::cout << "acr " << detail::format_double(report.acr) << "\n"
              << "cost_reduction " << detail::format_double(report.cost_reduction) << "\n"
              << "emission_reduction_t " << detail::format_double(report.emission_reduction_t) << "\n"
              << "steps " << report.trace.size() << "\n";
    return 0;
}

int run_simulate(const std::string& checkpoint_path, const std::string& data, const std::string& out,
                 long long start_hour, long long hours, const std::string& schedule_name,
                 std::uint64_t seed) {
    require_file(checkpoint_path, "checkpoint");
    require_file(data, "data file");
    if (start_hour < 0 || hours < 1) throw UsageError("simulate: start-hour must be >= 0 and hours >= 1");
    const Checkpoint cp = load_checkpoint(checkpoint_path);
    const MpeSchedule schedule = resolve_schedule(schedule_name, cp.horizon);
    const YearSeries series = load_csv(data, cp.battery.dt_hours);
    const ForecastBundle forecasts =
        generate_forecasts(series, schedule, derive_seed(seed, kStreamTestForecast));
    if (static_cast<std::size_t>(start_hour) + static_cast<std::size_t>(hours) > forecasts.origins())
        throw UsageError("simulate: window [" + std::to_string(start_hour) + ", " +
                         std::to_string(start_hour + hours) + ") exceeds the " +
                         std::to_string(forecasts.origins()) + " forecastable hours");

    const EvalReport report =
        evaluate(cp.net, series, forecasts, cp.battery, cp.alpha, cp.norm,
                 static_cast<std::size_t>(start_hour), static_cast<std::size_t>(hours));
    const fs::path dir = ensure_out_dir(out);
    save_trace_csv(dir / "week.csv", report.trace);
    save_week_svg(dir / "week.svg", report.trace);

    RunManifest manifest;
    manifest.command = "simulate";
    auto& c = manifest.config;
    c["checkpoint"] = checkpoint_path;
    c["data"] = data;
    c["start-hour"] = std::to_string(start_hour);
    c["hours"] = std::to_string(hours);
    c["schedule"] = schedule_name;
    c["seed"] = std::to_string(seed);
    manifest.add_input(checkpoint_path);
    manifest.add_input(data);
    add_schedule_input(manifest, schedule_name);
    manifest.add_output(dir, dir / "week.csv");
    manifest.add_output(dir, dir / "week.svg");
    save_manifest(dir / "manifest.json", manifest);

    std::cout << "rows " << report.trace.size() << "\n"
              << "window_reward " << detail::format_double(report.acr) << "\n";
    return 0;
}

int run_compare(TrainCliOpts& opts, const std::string& train_data, const std::string& test_data,
                const std::string& out, std::vector<std::uint64_t> seeds, const std::string& grid) {
    require_file(train_data, "train data file");
    require_file(test_data, "test data file");
    if (seeds.size() < 2) throw UsageError("compare: need at least 2 seeds");
    const MpeSchedule schedule = finalize_train_options(opts, false);
    const YearSeries train_series = load_csv(train_data, opts.config.battery.dt_hours);
    const YearSeries test_series = load_csv(test_data, opts.config.battery.dt_hours);
    const bool four_way = grid == "four";

    const ComparisonTable table =
        compare_modes(opts.config, seeds, train_series, test_series, schedule, four_way);

    const fs::path dir = ensure_out_dir(out);
    save_comparison_csv(dir / "comparison.csv", table);

    RunManifest manifest;
    manifest.command = "compare";
    manifest.config = train_config_snapshot(opts, train_data);
    manifest.config.erase("data");
    manifest.config["train-data"] = train_data;
    manifest.config["test-data"] = test_data;
    std::string seed_list;
    for (std::size_t i = 0; i < seeds.size(); ++i)
        seed_list += (i ? "," : "") + std::to_string(seeds[i]);
    manifest.config["seeds"] = seed_list;
    manifest.config["grid"] = grid;
    manifest.config.erase("seed");
    manifest.add_input(train_data);
    manifest.add_input(test_data);
    add_schedule_input(manifest, opts.schedule);
    manifest.add_output(dir, dir / "comparison.csv");
    save_manifest(dir / "manifest.json", manifest);

    std::cout << "seed";
    for (const auto& col : table.columns) std::cout << ',' << col;
    std::cout << '\n';
    for (const auto& row : table.rows) {
        std::cout << row.seed;
        for (double v : row.acr) std::cout << ',' << detail::format_double(v);
        std::cout << '\n';
    }
    std::cout << "median";
    for (double v : table.medians) std::cout << ',' << detail::format_double(v);
    std::cout << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Error-discounted deep Q-learning for microgrid battery dispatch"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    std::string config_sink; // value consumed by the pre-parse expansion

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic benchmark year (train + test)");
    std::string synth_out;
    std::uint64_t synth_seed = 7;
    SynthConfig synth_cfg;
    double noise_std = 0.05;
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--days", synth_cfg.days, "Days to generate")->capture_default_str();
    synth_cmd->add_option("--base-demand", synth_cfg.base_demand_kw, "Mean demand, kW")
        ->capture_default_str();
    synth_cmd->add_option("--demand-amplitude", synth_cfg.demand_amplitude_kw, "Diurnal swing, kW")
        ->capture_default_str();
    synth_cmd->add_option("--demand-jitter", synth_cfg.demand_jitter_kw, "Hourly noise std, kW")
        ->capture_default_str();
    synth_cmd->add_option("--pv-peak", synth_cfg.pv_peak_kw, "Solar peak, kW")->capture_default_str();
    synth_cmd->add_option("--sunrise", synth_cfg.sunrise_hour, "Generation start hour")
        ->capture_default_str();
    synth_cmd->add_option("--sunset", synth_cfg.sunset_hour, "Generation end hour")
        ->capture_default_str();
    synth_cmd->add_option("--price-night", synth_cfg.price_night, "Off-peak price per kWh")
        ->capture_default_str();
    synth_cmd->add_option("--price-day", synth_cfg.price_day, "Peak price per kWh")
        ->capture_default_str();
    synth_cmd->add_option("--ci-night", synth_cfg.ci_night, "Off-peak carbon intensity, kg/kWh")
        ->capture_default_str();
    synth_cmd->add_option("--ci-day", synth_cfg.ci_day, "Peak carbon intensity, kg/kWh")
        ->capture_default_str();
    synth_cmd->add_option("--noise-std", noise_std, "Relative sensor noise on unmet power")
        ->capture_default_str();
    synth_cmd->add_option("--dt", synth_cfg.dt_hours, "Step length, hours")->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a Q-network on a data year");
    TrainCliOpts train_opts;
    std::string train_data, train_out;
    train_cmd->add_option("--data", train_data, "Training series CSV")->required();
    train_cmd->add_option("--out", train_out, "Output directory")->required();
    add_train_options(train_cmd, train_opts);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint over a test year");
    std::string eval_checkpoint, eval_data, eval_out;
    std::string eval_schedule = "soit2fnn";
    std::uint64_t eval_seed = 1;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "Test series CSV")->required();
    eval_cmd->add_option("--out", eval_out, "Output directory")->required();
    eval_cmd->add_option("--schedule", eval_schedule, "Error schedule for evaluation forecasts")
        ->capture_default_str();
    eval_cmd->add_option("--seed", eval_seed, "Forecast noise seed")->capture_default_str();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Trace a policy over a window (default one week)");
    std::string sim_checkpoint, sim_data, sim_out;
    std::string sim_schedule = "soit2fnn";
    std::uint64_t sim_seed = 1;
    long long sim_start = 0, sim_hours = 168;
    sim_cmd->add_option("--checkpoint", sim_checkpoint, "Checkpoint file")->required();
    sim_cmd->add_option("--data", sim_data, "Series CSV")->required();
    sim_cmd->add_option("--out", sim_out, "Output directory")->required();
    sim_cmd->add_option("--start-hour", sim_start, "First hour of the window")->capture_default_str();
    sim_cmd->add_option("--hours", sim_hours, "Window length")->capture_default_str();
    sim_cmd->add_option("--schedule", sim_schedule, "Error schedule for forecasts")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim_seed, "Forecast noise seed")->capture_default_str();

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Train and evaluate TD vs ETD across seeds");
    TrainCliOpts cmp_opts;
    std::string cmp_train, cmp_test, cmp_out;
    std::vector<std::uint64_t> cmp_seeds;
    std::string cmp_grid = "four";
    cmp_cmd->add_option("--train-data", cmp_train, "Training series CSV")->required();
    cmp_cmd->add_option("--test-data", cmp_test, "Test series CSV")->required();
    cmp_cmd->add_option("--out", cmp_out, "Output directory")->required();
    cmp_cmd->add_option("--seeds", cmp_seeds, "Comma-separated run seeds")
        ->required()
        ->delimiter(',');
    cmp_cmd->add_option("--grid", cmp_grid,
                        "four: actual/predicted x td/etd; two: predicted td/etd only")
        ->check(CLI::IsMember({"four", "two"}))
        ->capture_default_str();
    add_train_options(cmp_cmd, cmp_opts);
    cmp_cmd->get_option("--seed")->description("Ignored; --seeds drives compare runs");

    for (CLI::App* sub : {synth_cmd, train_cmd, eval_cmd, sim_cmd, cmp_cmd})
        sub->add_option("--config", config_sink, "key=value config file; flags override it");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (!args.empty()) {
            CLI::App* sub = nullptr;
            for (CLI::App* candidate : {synth_cmd, train_cmd, eval_cmd, sim_cmd, cmp_cmd})
                if (candidate->get_name() == args.front()) sub = candidate;
            if (sub != nullptr) {
                std::string config_path;
                const std::vector<std::string> user_args(args.begin() + 1, args.end());
                for (std::size_t i = 0; i < user_args.size(); ++i) {
                    if (user_args[i] == "--config" && i + 1 < user_args.size())
                        config_path = user_args[i + 1];
                    else if (user_args[i].rfind("--config=", 0) == 0)
                        config_path = user_args[i].substr(9);
                }
                if (!config_path.empty())
                    args = apply_config_file(sub, sub->get_name(), user_args, config_path);
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*synth_cmd) return run_synth(synth_out, synth_seed, synth_cfg, noise_std);
        if (*train_cmd) return run_train(train_opts, train_data, train_out);
        if (*eval_cmd) return run_eval(eval_checkpoint, eval_data, eval_out, eval_schedule, eval_seed);
        if (*sim_cmd)
            return run_simulate(sim_checkpoint, sim_data, sim_out, sim_start, sim_hours, sim_schedule,
                                sim_seed);
        if (*cmp_cmd) return run_compare(cmp_opts, cmp_train, cmp_test, cmp_out, cmp_seeds, cmp_grid);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
