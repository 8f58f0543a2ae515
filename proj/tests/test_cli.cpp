#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <etdgrid/compare.hpp>
#include <etdgrid/manifest.hpp>
#include <etdgrid/series.hpp>
#include <etdgrid/trainer.hpp>

namespace fs = std::filesystem;
using namespace etdgrid;

// These cases drive the installed binary end to end through a shell, so
// they check the user-facing contract: exit codes, output files, manifest
// contents, and the flag/config precedence rules.
namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "etdgrid_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

RunResult run_cli(const std::string& args) {
    static int call_no = 0;
    const fs::path out_file = work_dir() / ("stdout_" + std::to_string(call_no) + ".txt");
    const fs::path err_file = work_dir() / ("stderr_" + std::to_string(call_no) + ".txt");
    ++call_no;

    const std::string cmd = std::string("\"") + ETDGRID_CLI_PATH + "\" " + args + " > \"" +
                            out_file.string() + "\" 2> \"" + err_file.string() + "\"";
    const int status = std::system(cmd.c_str());

    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_file);
    r.err = read_file(err_file);
    return r;
}

// 20 synthetic days shared by every case below; generated once.
const fs::path& data_dir() {
    static const fs::path dir = [] {
        const fs::path d = work_dir() / "data";
        const RunResult r = run_cli("synth --out " + d.string() + " --days 20 --seed 3");
        REQUIRE(r.exit_code == 0);
        return d;
    }();
    return dir;
}

// One tiny but real training run shared by eval/simulate cases.
const fs::path& checkpoint_dir() {
    static const fs::path dir = [] {
        const fs::path d = work_dir() / "ckpt";
        const RunResult r =
            run_cli("train --data " + (data_dir() / "train.csv").string() + " --out " + d.string() +
                    " --episodes 3 --warmup 64 --batch-size 16 --seed 5");
        REQUIRE(r.exit_code == 0);
        return d;
    }();
    return dir;
}

} // namespace

TEST_CASE("cli: version and help succeed", "[cli]") {
    const RunResult v = run_cli("--version");
    CHECK(v.exit_code == 0);
    CHECK(v.out.find("1.0.0") != std::string::npos);

    const RunResult h = run_cli("synth --help");
    CHECK(h.exit_code == 0);
    CHECK(h.out.find("--days") != std::string::npos);
}

TEST_CASE("cli: synth is deterministic per seed and hashed in its manifest", "[cli]") {
    const fs::path s1 = data_dir();
    const fs::path s2 = work_dir() / "data_again";
    const RunResult again = run_cli("synth --out " + s2.string() + " --days 20 --seed 3");
    REQUIRE(again.exit_code == 0);
    CHECK(again.out.find("wrote") != std::string::npos);
    CHECK(again.out.find("480 rows") != std::string::npos);

    const std::string train1 = read_file(s1 / "train.csv");
    CHECK(train1 == read_file(s2 / "train.csv"));
    CHECK(read_file(s1 / "test.csv") == read_file(s2 / "test.csv"));
    CHECK(train1 != read_file(s1 / "test.csv"));
    CHECK(line_count(train1) == 20 * 24 + 1);

    const RunManifest m = load_manifest(s1 / "manifest.json");
    CHECK(m.command == "synth");
    CHECK(m.config.at("days") == "20");
    CHECK(m.config.at("seed") == "3");
    CHECK(m.inputs.empty());
    REQUIRE(m.outputs.size() == 2);
    CHECK(m.outputs[0].path == "train.csv");
    CHECK(m.outputs[0].hash == hash_hex(fnv1a64_file(s1 / "train.csv")));
    CHECK(m.outputs[1].hash == hash_hex(fnv1a64_file(s1 / "test.csv")));

    const fs::path s3 = work_dir() / "data_seed4";
    REQUIRE(run_cli("synth --out " + s3.string() + " --days 20 --seed 4").exit_code == 0);
    CHECK(read_file(s3 / "train.csv") != train1);
}

TEST_CASE("cli: config file applies and explicit flags override it", "[cli]") {
    const fs::path cfg = work_dir() / "synth.cfg";
    {
        std::ofstream out(cfg);
        out << "# benchmark profile\n";
        out << "days = 6\n";
        out << "seed = 11\n";
    }

    const fs::path from_file = work_dir() / "cfg_only";
    REQUIRE(run_cli("synth --out " + from_file.string() + " --config " + cfg.string()).exit_code == 0);
    CHECK(line_count(read_file(from_file / "train.csv")) == 6 * 24 + 1);

    const fs::path overridden = work_dir() / "cfg_override";
    REQUIRE(run_cli("synth --out " + overridden.string() + " --config " + cfg.string() +
                    " --days 3")
                .exit_code == 0);
    CHECK(line_count(read_file(overridden / "train.csv")) == 3 * 24 + 1);
    // The non-overridden key still comes from the file.
    const RunManifest m = load_manifest(overridden / "manifest.json");
    CHECK(m.config.at("days") == "3");
    CHECK(m.config.at("seed") == "11");

    const fs::path bad_key = work_dir() / "bad.cfg";
    {
        std::ofstream out(bad_key);
        out << "dayz = 6\n";
    }
    const RunResult bad = run_cli("synth --out " + (work_dir() / "x1").string() + " --config " +
                                  bad_key.string());
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("unknown key") != std::string::npos);

    const fs::path out_key = work_dir() / "outkey.cfg";
    {
        std::ofstream out(out_key);
        out << "out = somewhere\n";
    }
    const RunResult banned = run_cli("synth --out " + (work_dir() / "x2").string() + " --config " +
                                     out_key.string());
    CHECK(banned.exit_code == 2);
    CHECK(banned.err.find("command line") != std::string::npos);
}

TEST_CASE("cli: usage errors exit with code 2", "[cli]") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("synth").exit_code == 2);                      // --out is required
    CHECK(run_cli("synth --out x --bogus-flag 1").exit_code == 2);
    CHECK(run_cli("train --data a.csv --out x --mode sarsa").exit_code == 2);

    const RunResult missing =
        run_cli("train --data " + (work_dir() / "no_such.csv").string() + " --out " +
                (work_dir() / "x3").string());
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("no_such.csv") != std::string::npos);

    const RunResult bad_schedule =
        run_cli("train --data " + (data_dir() / "train.csv").string() + " --out " +
                (work_dir() / "x4").string() + " --schedule nonsense");
    CHECK(bad_schedule.exit_code == 2);
    CHECK(bad_schedule.err.find("unknown schedule") != std::string::npos);
}

TEST_CASE("cli: train writes checkpoint, curve, and manifest", "[cli]") {
    const fs::path d = checkpoint_dir();
    CHECK(fs::is_regular_file(d / "checkpoint.bin"));
    CHECK(fs::is_regular_file(d / "curve.csv"));

    const std::vector<double> curve = load_curve_csv(d / "curve.csv");
    CHECK(curve.size() == 3);

    const RunManifest m = load_manifest(d / "manifest.json");
    CHECK(m.command == "train");
    CHECK(m.config.at("episodes") == "3");
    CHECK(m.config.at("mode") == "etd");
    CHECK(m.config.at("schedule") == "soit2fnn");
    CHECK(m.config.at("data") == (data_dir() / "train.csv").generic_string());
    REQUIRE(m.inputs.size() == 1);
    CHECK(m.inputs[0].hash == hash_hex(fnv1a64_file(data_dir() / "train.csv")));
    REQUIRE(m.outputs.size() == 2);
    CHECK(m.outputs[0].path == "checkpoint.bin");
    CHECK(m.outputs[1].path == "curve.csv");
}

TEST_CASE("cli: train reports progress and td mode warns about the schedule", "[cli]") {
    const fs::path d = work_dir() / "ckpt_td";
    const RunResult td =
        run_cli("train --data " + (data_dir() / "train.csv").string() + " --out " + d.string() +
                " --episodes 2 --warmup 64 --batch-size 16 --seed 5 --mode td");
    REQUIRE(td.exit_code == 0);
    CHECK(td.out.find("episodes 2") != std::string::npos);
    CHECK(td.out.find("mean_reward_last100") != std::string::npos);
    CHECK(td.out.find("checkpoint") != std::string::npos);
    CHECK(td.err.find("warning: mode td ignores the error-discount schedule") != std::string::npos);

    // The default etd mode stays quiet.
    const RunResult etd =
        run_cli("train --data " + (data_dir() / "train.csv").string() + " --out " +
                (work_dir() / "ckpt_quiet").string() +
                " --episodes 2 --warmup 64 --batch-size 16 --seed 5");
    REQUIRE(etd.exit_code == 0);
    CHECK(etd.err.empty());
}

TEST_CASE("cli: eval traces the whole forecastable span deterministically", "[cli]") {
    const std::string ckpt = (checkpoint_dir() / "checkpoint.bin").string();
    const std::string data = (data_dir() / "test.csv").string();

    const fs::path e1 = work_dir() / "eval1";
    const RunResult r1 = run_cli("eval --checkpoint " + ckpt + " --data " + data + " --out " +
                                 e1.string());
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.find("acr ") != std::string::npos);
    CHECK(r1.out.find("cost_reduction ") != std::string::npos);
    // 480 rows minus the 6-step forecast horizon.
    CHECK(r1.out.find("steps 474") != std::string::npos);
    CHECK(line_count(read_file(e1 / "trace.csv")) == 474 + 1);

    const fs::path e2 = work_dir() / "eval2";
    const RunResult r2 = run_cli("eval --checkpoint " + ckpt + " --data " + data + " --out " +
                                 e2.string());
    REQUIRE(r2.exit_code == 0);
    CHECK(read_file(e1 / "trace.csv") == read_file(e2 / "trace.csv"));
    CHECK(r1.out == r2.out);

    const RunManifest m = load_manifest(e1 / "manifest.json");
    CHECK(m.command == "eval");
    REQUIRE(m.inputs.size() == 2);
    CHECK(m.inputs[0].hash == hash_hex(fnv1a64_file(ckpt)));
    REQUIRE(m.outputs.size() == 1);
    CHECK(m.outputs[0].path == "trace.csv");
}

TEST_CASE("cli: simulate writes a bounded window and rejects overruns", "[cli]") {
    const std::string ckpt = (checkpoint_dir() / "checkpoint.bin").string();
    const std::string data = (data_dir() / "test.csv").string();

    const fs::path d = work_dir() / "sim";
    const RunResult r = run_cli("simulate --checkpoint " + ckpt + " --data " + data + " --out " +
                                d.string() + " --start-hour 24 --hours 48");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("rows 48") != std::string::npos);
    CHECK(line_count(read_file(d / "week.csv")) == 48 + 1);

    const std::string svg = read_file(d / "week.svg");
    CHECK(svg.find("<svg") != std::string::npos);

    const std::vector<TraceRow> trace = load_trace_csv(d / "week.csv");
    REQUIRE(trace.size() == 48);
    CHECK(trace.front().hour == 24);
    CHECK(trace.back().hour == 71);
    for (const auto& row : trace) {
        CHECK(row.soc_kwh >= 200.0 - 1e-9);
        CHECK(row.soc_kwh <= 1000.0 + 1e-9);
    }

    // 440 + 48 > 474 forecastable hours.
    const RunResult overrun = run_cli("simulate --checkpoint " + ckpt + " --data " + data +
                                      " --out " + (work_dir() / "sim_bad").string() +
                                      " --start-hour 440 --hours 48");
    CHECK(overrun.exit_code == 2);
    CHECK(overrun.err.find("exceeds") != std::string::npos);
}

TEST_CASE("cli: compare emits the per-seed table with a median row", "[cli]") {
    const fs::path d = work_dir() / "cmp";
    const RunResult r = run_cli(
        "compare --train-data " + (data_dir() / "train.csv").string() + " --test-data " +
        (data_dir() / "test.csv").string() + " --out " + d.string() +
        " --seeds 1,2 --grid two --episodes 2 --episode-length 24 --warmup 16 --batch-size 8");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("seed,predicted_td,predicted_etd") != std::string::npos);
    CHECK(r.out.find("median,") != std::string::npos);

    const ComparisonTable table = load_comparison_csv(d / "comparison.csv");
    REQUIRE(table.columns == std::vector<std::string>{"predicted_td", "predicted_etd"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].seed == 1);
    CHECK(table.rows[1].seed == 2);
    REQUIRE(table.medians.size() == 2);
    // Two seeds: the median must sit between the per-seed values.
    for (std::size_t c = 0; c < 2; ++c) {
        const double lo = std::min(table.rows[0].acr[c], table.rows[1].acr[c]);
        const double hi = std::max(table.rows[0].acr[c], table.rows[1].acr[c]);
        CHECK(table.medians[c] >= lo - 1e-12);
        CHECK(table.medians[c] <= hi + 1e-12);
    }

    const RunManifest m = load_manifest(d / "manifest.json");
    CHECK(m.command == "compare");
    CHECK(m.config.at("seeds") == "1,2");
    CHECK(m.config.at("grid") == "two");
    CHECK(!m.config.contains("seed"));

    const RunResult one_seed = run_cli(
        "compare --train-data " + (data_dir() / "train.csv").string() + " --test-data " +
        (data_dir() / "test.csv").string() + " --out " + (work_dir() / "cmp_bad").string() +
        " --seeds 9 --grid two --episodes 2");
    CHECK(one_seed.exit_code == 2);
    CHECK(one_seed.err.find("at least 2 seeds") != std::string::npos);
}

TEST_CASE("cli: a manifest config body reproduces the run byte for byte", "[cli]") {
    const RunManifest m = load_manifest(data_dir() / "manifest.json");

    const fs::path cfg = work_dir() / "repro.cfg";
    {
        std::ofstream out(cfg);
        for (const auto& [key, value] : m.config.items())
            out << key << " = " << value.get<std::string>() << "\n";
    }

    const fs::path repro = work_dir() / "repro";
    REQUIRE(run_cli("synth --out " + repro.string() + " --config " + cfg.string()).exit_code == 0);

    CHECK(hash_hex(fnv1a64_file(repro / "train.csv")) == m.outputs[0].hash);
    CHECK(hash_hex(fnv1a64_file(repro / "test.csv")) == m.outputs[1].hash);
}
