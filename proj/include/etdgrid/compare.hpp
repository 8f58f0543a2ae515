#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "etdgrid/trainer.hpp"

namespace etdgrid {

// Per-seed annual cumulative rewards, one value per column, columns in
// fixed report order. The four-way grid crosses training source (actual vs
// predicted futures) with update mode; the two-way variant keeps only the
// predicted-trained pair.
struct ComparisonRow {
    std::uint64_t seed = 0;
    std::vector<double> acr;
};

struct ComparisonTable {
    std::vector<std::string> columns;
    std::vector<ComparisonRow> rows;
    std::vector<double> medians;

    double median_of(const std::string& column) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == column) return medians.at(c);
        throw std::invalid_argument("comparison: no column named " + column);
    }
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace detail

// Worker count for compare fan-out: ETDGRID_THREADS when set, else the
// hardware count, never more than jobs and never less than 1.
inline unsigned compare_thread_count(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("ETDGRID_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed > 0) n = static_cast<unsigned>(parsed);
    }
    if (n == 0) n = 1;
    if (jobs > 0 && n > jobs) n = static_cast<unsigned>(jobs);
    return n;
}

// Trains one (seed, source, mode) cell and evaluates it greedily on the
// test year using schedule-generated forecasts (evaluation always runs on
// predicted values). Deterministic per cell.
inline double run_compare_cell(TrainConfig config, std::uint64_t seed, ForecastSource source,
                               UpdateMode mode, const YearSeries& train_series,
                               const YearSeries& test_series, const MpeSchedule& schedule) {
    config.seed = seed;
    config.forecast_source = source;
    config.mode = mode;
    const TrainResult trained = train(config, train_series, schedule);
    const ForecastBundle test_forecasts =
        generate_forecasts(test_series, schedule, derive_seed(seed, kStreamTestForecast));
    return policy_acr(trained.checkpoint, test_series, test_forecasts);
}

// Runs every cell of the comparison grid across the given seeds. Cells are
// independent and may fan out across worker threads; results are identical
// at any thread count. TD and ETD cells of one seed share their series,
// forecasts, and initial network, differing only in the update rule.
inline ComparisonTable compare_modes(const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                                     const YearSeries& train_series, const YearSeries& test_series,
                                     const MpeSchedule& schedule, bool four_way = true) {
    if (seeds.size() < 2) throw std::invalid_argument("compare: need at least 2 seeds");
    config.validate(train_series.size());

    ComparisonTable table;
    std::vector<std::pair<ForecastSource, UpdateMode>> cells;
    if (four_way) {
        table.columns = {"actual_td", "actual_etd", "predicted_td", "predicted_etd"};
        cells = {{ForecastSource::actual_as_prediction, UpdateMode::td},
                 {ForecastSource::actual_as_prediction, UpdateMode::etd},
                 {ForecastSource::synthetic_schedule, UpdateMode::td},
                 {ForecastSource::synthetic_schedule, UpdateMode::etd}};
    } else {
        table.columns = {"predicted_td", "predicted_etd"};
        cells = {{ForecastSource::synthetic_schedule, UpdateMode::td},
                 {ForecastSource::synthetic_schedule, UpdateMode::etd}};
    }

    struct Job {
        std::size_t row, col;
        std::uint64_t seed;
        ForecastSource source;
        UpdateMode mode;
    };
    std::vector<Job> jobs;
    for (std::size_t r = 0; r < seeds.size(); ++r)
        for (std::size_t c = 0; c < cells.size(); ++c)
            jobs.push_back({r, c, seeds[r], cells[c].first, cells[c].second});

    table.rows.resize(seeds.size());
    for (std::size_t r = 0; r < seeds.size(); ++r) {
        table.rows[r].seed = seeds[r];
        table.rows[r].acr.assign(cells.size(), 0.0);
    }

    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> failures(jobs.size());
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            try {
                table.rows[job.row].acr[job.col] = run_compare_cell(
                    config, job.seed, job.source, job.mode, train_series, test_series, schedule);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };

    const unsigned threads = compare_thread_count(jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);

    table.medians.resize(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> column;
        column.reserve(seeds.size());
        for (const auto& row : table.rows) column.push_back(row.acr[c]);
        table.medians[c] = detail::median(std::move(column));
    }
    return table;
}

inline void save_comparison_csv(const std::filesystem::path& path, const ComparisonTable& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("comparison: cannot write: " + path.string());
    out << "seed";
    for (const auto& c : table.columns) out << ',' << c;
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.seed;
        for (double v : row.acr) out << ',' << detail::format_double(v);
        out << '\n';
    }
    out << "median";
    for (double v : table.medians) out << ',' << detail::format_double(v);
    out << '\n';
    if (!out) throw std::runtime_error("comparison: write failed: " + path.string());
}

inline ComparisonTable load_comparison_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("comparison: cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("comparison: empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    ComparisonTable table;
    const auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "seed")
        throw std::runtime_error("comparison: unexpected header: " + line);
    for (std::size_t i = 1; i < header.size(); ++i) table.columns.emplace_back(header[i]);

    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row_no;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != table.columns.size() + 1)
            throw std::runtime_error("comparison: field count at row " + std::to_string(row_no));
        std::vector<double> values;
        for (std::size_t i = 1; i < fields.size(); ++i)
            values.push_back(detail::parse_double(fields[i], row_no, "acr"));
        if (fields[0] == "median") {
            table.medians = std::move(values);
        } else {
            ComparisonRow row;
            row.seed = static_cast<std::uint64_t>(detail::parse_double(fields[0], row_no, "seed"));
            row.acr = std::move(values);
            table.rows.push_back(std::move(row));
        }
    }
    if (table.medians.empty()) throw std::runtime_error("comparison: missing median row");
    return table;
}

} // namespace etdgrid
