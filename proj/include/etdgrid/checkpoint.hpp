#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdgrid/battery.hpp"
#include "etdgrid/network.hpp"
#include "etdgrid/series.hpp"

namespace etdgrid {

// Self-contained training snapshot: both networks, optimizer state, step
// counters, the live RNG streams, and the environment block an evaluator
// needs (battery parameters, reward weight, horizon, input scaling).
struct Checkpoint {
    Mlp net;
    Mlp target_net;
    AdamState adam;
    std::uint64_t train_steps = 0;   // gradient steps taken
    std::uint64_t episodes_done = 0; // completed episodes
    std::array<std::uint64_t, 4> window_rng{};
    std::array<std::uint64_t, 4> action_rng{};
    std::array<std::uint64_t, 4> replay_rng{};
    BatteryParams battery;
    double alpha = 0.25;
    double gamma = 0.99;
    int horizon = 6;
    NormStats norm;
};

// Binary little-endian layout, version 1. All integers fixed-width LE, all
// doubles as their IEEE-754 bit pattern in LE order:
//   magic "ETDGRIDQ", u32 version,
//   u32 layer_count L, i32 sizes[L],
//   per layer: f64 weights[rows*cols], f64 biases[rows]   (online net)
//   per layer: the same                                    (target net)
//   f64 beta1, beta2, eps; u64 adam_step;
//   per layer: f64 m_w, v_w arrays; f64 m_b, v_b arrays;
//   u64 train_steps, u64 episodes_done,
//   u64 window_rng[4], action_rng[4], replay_rng[4],
//   f64 battery {capacity, soc_min, soc_max, eta, e_max, dt},
//   f64 alpha, f64 gamma, i32 horizon,
//   f64 norm {pu_min, pu_max, pr_min, pr_max, ci_min, ci_max, soc_min, soc_max}
inline constexpr char kCheckpointMagic[8] = {'E', 'T', 'D', 'G', 'R', 'I', 'D', 'Q'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

inline void put_i32(std::ostream& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_vec(std::ostream& out, const std::vector<double>& v) {
    for (double x : v) put_f64(out, x);
}

inline std::uint64_t get_u64(std::istream& in) {
    char b[8];
    in.read(b, 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

inline std::uint32_t get_u32(std::istream& in) {
    char b[4];
    in.read(b, 4);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

inline std::int32_t get_i32(std::istream& in) { return static_cast<std::int32_t>(get_u32(in)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void get_vec(std::istream& in, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = get_f64(in);
}

inline void put_layers(std::ostream& out, const std::vector<std::vector<double>>& w,
                       const std::vector<std::vector<double>>& b) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        put_vec(out, w[l]);
        put_vec(out, b[l]);
    }
}

inline void get_layers(std::istream& in, const std::vector<int>& sizes,
                       std::vector<std::vector<double>>& w, std::vector<std::vector<double>>& b) {
    w.resize(sizes.size() - 1);
    b.resize(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const auto rows = static_cast<std::size_t>(sizes[l + 1]);
        const auto cols = static_cast<std::size_t>(sizes[l]);
        get_vec(in, w[l], rows * cols);
        get_vec(in, b[l], rows);
    }
}

} // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
    cp.net.validate();
    cp.target_net.validate();
    if (cp.target_net.sizes != cp.net.sizes)
        throw std::invalid_argument("checkpoint: online/target shape mismatch");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write: " + path.string());
    out.write(kCheckpointMagic, 8);
    detail::put_u32(out, kCheckpointVersion);

    detail::put_u32(out, static_cast<std::uint32_t>(cp.net.sizes.size()));
    for (int s : cp.net.sizes) detail::put_i32(out, s);
    detail::put_layers(out, cp.net.weights, cp.net.biases);
    detail::put_layers(out, cp.target_net.weights, cp.target_net.biases);

    detail::put_f64(out, cp.adam.beta1);
    detail::put_f64(out, cp.adam.beta2);
    detail::put_f64(out, cp.adam.eps);
    detail::put_u64(out, cp.adam.step);
    detail::put_layers(out, cp.adam.m_weights, cp.adam.m_biases);
    detail::put_layers(out, cp.adam.v_weights, cp.adam.v_biases);

    detail::put_u64(out, cp.train_steps);
    detail::put_u64(out, cp.episodes_done);
    for (const auto& stream : {cp.window_rng, cp.action_rng, cp.replay_rng})
        for (std::uint64_t word : stream) detail::put_u64(out, word);

    detail::put_f64(out, cp.battery.capacity_kwh);
    detail::put_f64(out, cp.battery.soc_min_kwh);
    detail::put_f64(out, cp.battery.soc_max_kwh);
    detail::put_f64(out, cp.battery.eta);
    detail::put_f64(out, cp.battery.e_max_kwh);
    detail::put_f64(out, cp.battery.dt_hours);
    detail::put_f64(out, cp.alpha);
    detail::put_f64(out, cp.gamma);
    detail::put_i32(out, cp.horizon);
    detail::put_f64(out, cp.norm.pu_min);
    detail::put_f64(out, cp.norm.pu_max);
    detail::put_f64(out, cp.norm.pr_min);
    detail::put_f64(out, cp.norm.pr_max);
    detail::put_f64(out, cp.norm.ci_min);
    detail::put_f64(out, cp.norm.ci_max);
    detail::put_f64(out, cp.norm.soc_min);
    detail::put_f64(out, cp.norm.soc_max);

    if (!out) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open: " + path.string());

    char magic[8];
    in.read(magic, 8);
    if (!in || !std::equal(magic, magic + 8, kCheckpointMagic))
        throw std::runtime_error("checkpoint: bad magic: " + path.string());
    const std::uint32_t version = detail::get_u32(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint cp;
    const std::uint32_t layer_count = detail::get_u32(in);
    if (layer_count < 2 || layer_count > 64)
        throw std::runtime_error("checkpoint: implausible layer count");
    cp.net.sizes.resize(layer_count);
    for (int& s : cp.net.sizes) {
        s = detail::get_i32(in);
        if (s < 1 || s > 1 << 20) throw std::runtime_error("checkpoint: implausible layer size");
    }
    cp.target_net.sizes = cp.net.sizes;
    detail::get_layers(in, cp.net.sizes, cp.net.weights, cp.net.biases);
    detail::get_layers(in, cp.net.sizes, cp.target_net.weights, cp.target_net.biases);

    cp.adam.beta1 = detail::get_f64(in);
    cp.adam.beta2 = detail::get_f64(in);
    cp.adam.eps = detail::get_f64(in);
    cp.adam.step = detail::get_u64(in);
    detail::get_layers(in, cp.net.sizes, cp.adam.m_weights, cp.adam.m_biases);
    detail::get_layers(in, cp.net.sizes, cp.adam.v_weights, cp.adam.v_biases);

    cp.train_steps = detail::get_u64(in);
    cp.episodes_done = detail::get_u64(in);
    for (auto* stream : {&cp.window_rng, &cp.action_rng, &cp.replay_rng})
        for (std::uint64_t& word : *stream) word = detail::get_u64(in);

    cp.battery.capacity_kwh = detail::get_f64(in);
    cp.battery.soc_min_kwh = detail::get_f64(in);
    cp.battery.soc_max_kwh = detail::get_f64(in);
    cp.battery.eta = detail::get_f64(in);
    cp.battery.e_max_kwh = detail::get_f64(in);
    cp.battery.dt_hours = detail::get_f64(in);
    cp.alpha = detail::get_f64(in);
    cp.gamma = detail::get_f64(in);
    cp.horizon = detail::get_i32(in);
    cp.norm.pu_min = detail::get_f64(in);
    cp.norm.pu_max = detail::get_f64(in);
    cp.norm.pr_min = detail::get_f64(in);
    cp.norm.pr_max = detail::get_f64(in);
    cp.norm.ci_min = detail::get_f64(in);
    cp.norm.ci_max = detail::get_f64(in);
    cp.norm.soc_min = detail::get_f64(in);
    cp.norm.soc_max = detail::get_f64(in);

    in.peek();
    if (!in.eof()) throw std::runtime_error("checkpoint: trailing bytes: " + path.string());

    cp.net.validate();
    cp.target_net.validate();
    cp.battery.validate();
    if (cp.horizon < 1) throw std::runtime_error("checkpoint: horizon must be >= 1");
    return cp;
}

} // namespace etdgrid
