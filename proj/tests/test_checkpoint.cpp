#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <vector>

#include "etdgrid/checkpoint.hpp"
#include "etdgrid/qlearn.hpp"
#include "etdgrid/rng.hpp"

using namespace etdgrid;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "etdgrid_checkpoint_tests";
    fs::create_directories(dir);
    return dir / name;
}

// A checkpoint exercising every field: trained nets, warm Adam moments,
// nonzero counters and RNG states, non-default physics and normalization.
Checkpoint sample_checkpoint() {
    Checkpoint cp;
    Rng rng(1234);
    cp.net = make_mlp(q_network_sizes(22, 5), rng);
    cp.target_net = make_mlp(q_network_sizes(22, 5), rng);
    cp.adam.resize_for(cp.net);

    Gradients grads;
    grads.resize_for(cp.net);
    for (auto& layer : grads.weights)
        for (double& g : layer) g = rng.normal();
    for (auto& layer : grads.biases)
        for (double& g : layer) g = rng.normal();
    adam_step(cp.net, grads, cp.adam, 1e-4);
    adam_step(cp.net, grads, cp.adam, 1e-4);

    cp.train_steps = 4242;
    cp.episodes_done = 17;
    cp.window_rng = {1, 2, 3, 4};
    cp.action_rng = {5, 6, 7, 8};
    cp.replay_rng = {9, 10, 11, 12};
    cp.battery.capacity_kwh = 800.0;
    cp.battery.soc_min_kwh = 100.0;
    cp.battery.soc_max_kwh = 750.0;
    cp.battery.eta = 0.85;
    cp.battery.e_max_kwh = 150.0;
    cp.alpha = 0.3;
    cp.gamma = 0.95;
    cp.horizon = 6;
    cp.norm.pu_min = -50.0;
    cp.norm.pu_max = 900.0;
    cp.norm.pr_min = 0.05;
    cp.norm.pr_max = 0.2;
    cp.norm.ci_min = 0.2;
    cp.norm.ci_max = 0.5;
    cp.norm.soc_min = 100.0;
    cp.norm.soc_max = 750.0;
    return cp;
}

void require_same_layers(const std::vector<std::vector<double>>& a,
                         const std::vector<std::vector<double>>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t l = 0; l < a.size(); ++l) {
        REQUIRE(a[l].size() == b[l].size());
        for (std::size_t i = 0; i < a[l].size(); ++i) REQUIRE(a[l][i] == b[l][i]);
    }
}

} // namespace

TEST_CASE("checkpoint: save and load round-trip every field bit-exactly") {
    const Checkpoint cp = sample_checkpoint();
    const fs::path p = temp_file("roundtrip.bin");
    save_checkpoint(p, cp);
    const Checkpoint r = load_checkpoint(p);

    REQUIRE(r.net.sizes == cp.net.sizes);
    require_same_layers(r.net.weights, cp.net.weights);
    require_same_layers(r.net.biases, cp.net.biases);
    require_same_layers(r.target_net.weights, cp.target_net.weights);
    require_same_layers(r.target_net.biases, cp.target_net.biases);

    REQUIRE(r.adam.beta1 == cp.adam.beta1);
    REQUIRE(r.adam.beta2 == cp.adam.beta2);
    REQUIRE(r.adam.eps == cp.adam.eps);
    REQUIRE(r.adam.step == cp.adam.step);
    require_same_layers(r.adam.m_weights, cp.adam.m_weights);
    require_same_layers(r.adam.v_weights, cp.adam.v_weights);
    require_same_layers(r.adam.m_biases, cp.adam.m_biases);
    require_same_layers(r.adam.v_biases, cp.adam.v_biases);

    REQUIRE(r.train_steps == cp.train_steps);
    REQUIRE(r.episodes_done == cp.episodes_done);
    REQUIRE(r.window_rng == cp.window_rng);
    REQUIRE(r.action_rng == cp.action_rng);
    REQUIRE(r.replay_rng == cp.replay_rng);

    REQUIRE(r.battery.capacity_kwh == cp.battery.capacity_kwh);
    REQUIRE(r.battery.soc_min_kwh == cp.battery.soc_min_kwh);
    REQUIRE(r.battery.soc_max_kwh == cp.battery.soc_max_kwh);
    REQUIRE(r.battery.eta == cp.battery.eta);
    REQUIRE(r.battery.e_max_kwh == cp.battery.e_max_kwh);
    REQUIRE(r.battery.dt_hours == cp.battery.dt_hours);
    REQUIRE(r.alpha == cp.alpha);
    REQUIRE(r.gamma == cp.gamma);
    REQUIRE(r.horizon == cp.horizon);
    REQUIRE(r.norm.pu_min == cp.norm.pu_min);
    REQUIRE(r.norm.pu_max == cp.norm.pu_max);
    REQUIRE(r.norm.pr_min == cp.norm.pr_min);
    REQUIRE(r.norm.pr_max == cp.norm.pr_max);
    REQUIRE(r.norm.ci_min == cp.norm.ci_min);
    REQUIRE(r.norm.ci_max == cp.norm.ci_max);
    REQUIRE(r.norm.soc_min == cp.norm.soc_min);
    REQUIRE(r.norm.soc_max == cp.norm.soc_max);

    SECTION("a second save of the loaded copy is byte-identical") {
        const fs::path q = temp_file("roundtrip2.bin");
        save_checkpoint(q, r);
        std::ifstream f1(p, std::ios::binary), f2(q, std::ios::binary);
        const std::vector<char> b1((std::istreambuf_iterator<char>(f1)), {});
        const std::vector<char> b2((std::istreambuf_iterator<char>(f2)), {});
        REQUIRE(b1 == b2);
    }
}

TEST_CASE("checkpoint: corrupt files are rejected") {
    const Checkpoint cp = sample_checkpoint();
    const fs::path good = temp_file("good.bin");
    save_checkpoint(good, cp);

    std::ifstream in(good, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();

    const auto write_bytes = [](const fs::path& p, const std::vector<char>& b) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write(b.data(), static_cast<std::streamsize>(b.size()));
    };

    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_checkpoint(temp_file("nope.bin")), std::runtime_error);
    }
    SECTION("bad magic") {
        std::vector<char> b = bytes;
        b[0] = 'X';
        const fs::path p = temp_file("badmagic.bin");
        write_bytes(p, b);
        REQUIRE_THROWS_WITH(load_checkpoint(p), Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("unsupported version") {
        std::vector<char> b = bytes;
        b[8] = 99; // version u32 little-endian low byte
        const fs::path p = temp_file("badversion.bin");
        write_bytes(p, b);
        REQUIRE_THROWS_WITH(load_checkpoint(p), Catch::Matchers::ContainsSubstring("version"));
    }
    SECTION("truncated file") {
        std::vector<char> b(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2));
        const fs::path p = temp_file("truncated.bin");
        write_bytes(p, b);
        REQUIRE_THROWS_AS(load_checkpoint(p), std::runtime_error);
    }
    SECTION("trailing bytes") {
        std::vector<char> b = bytes;
        b.push_back(0);
        const fs::path p = temp_file("trailing.bin");
        write_bytes(p, b);
        REQUIRE_THROWS_AS(load_checkpoint(p), std::runtime_error);
    }
    SECTION("implausible layer size") {
        std::vector<char> b = bytes;
        // Layer count lives right after magic+version; set it to 200.
        b[12] = static_cast<char>(200);
        const fs::path p = temp_file("badshape.bin");
        write_bytes(p, b);
        REQUIRE_THROWS_AS(load_checkpoint(p), std::runtime_error);
    }
    SECTION("save refuses mismatched online/target shapes") {
        Checkpoint bad = cp;
        bad.target_net = zero_mlp({22, 32, 5});
        REQUIRE_THROWS_AS(save_checkpoint(temp_file("mismatch.bin"), bad), std::invalid_argument);
    }
}
