#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "etdgrid/network.hpp"
#include "etdgrid/replay.hpp"
#include "etdgrid/rng.hpp"

namespace etdgrid {

enum class UpdateMode { td, etd };

// Greatest Q value; ties and the empty bootstrap case never occur here
// because the output layer is non-empty by construction.
inline double max_q(const std::vector<double>& q) { return *std::max_element(q.begin(), q.end()); }

// Argmax with ties broken by lowest index.
inline int argmax_q(const std::vector<double>& q) {
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

// One-step bootstrapped target. The error-discounted form scales only the
// bootstrap term; with gamma_prime_1 = 1 the two targets are the same
// floating-point expression, so the modes coincide bit for bit.
inline double etd_target(double reward, const std::vector<double>& next_q, double gamma,
                         double gamma_prime_1, bool terminal) {
    if (!(gamma_prime_1 >= 0.5 && gamma_prime_1 <= 1.0))
        throw std::invalid_argument("target: gamma_prime_1 must be in [0.5, 1]");
    if (terminal) return reward;
    return reward + gamma_prime_1 * gamma * max_q(next_q);
}

inline double td_target(double reward, const std::vector<double>& next_q, double gamma, bool terminal) {
    return etd_target(reward, next_q, gamma, 1.0, terminal);
}

// Epsilon-greedy over the network's action values.
inline int select_action(const Mlp& net, const StateVector& state, double epsilon, Rng& rng,
                         Activations& acts) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("select_action: epsilon must be in [0, 1]");
    if (epsilon > 0.0 && rng.next_double() < epsilon)
        return static_cast<int>(rng.next_below(static_cast<std::uint32_t>(net.output_size())));
    return argmax_q(forward(net, state, acts));
}

inline Mlp sync_target(const Mlp& net) { return net; }

// Reusable scratch space for train_batch.
struct TrainScratch {
    Activations acts;
    Activations target_acts;
    Gradients grads;
    std::vector<double> dloss;
};

// One Adam step on the loss 0.5 * mean[(target - Q(s,a))^2], targets from
// the target network and treated as constants. In TD mode every sample uses
// gamma_prime_1 = 1; in ETD mode each sample uses its stored value. Returns
// the mean loss. A batch with zero error everywhere is a fixed point: the
// update is skipped outright.
inline double train_batch(Mlp& net, const Mlp& target_net, AdamState& adam,
                          const std::vector<const ReplayTransition*>& batch, double gamma, double lr,
                          UpdateMode mode, TrainScratch& scratch) {
    if (batch.empty()) throw std::invalid_argument("train_batch: empty batch");
    if (scratch.grads.weights.size() != net.weights.size()) scratch.grads.resize_for(net);
    scratch.grads.clear();
    scratch.dloss.assign(static_cast<std::size_t>(net.output_size()), 0.0);

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    bool any_error = false;
    for (const ReplayTransition* tr : batch) {
        const double g1 = mode == UpdateMode::td ? 1.0 : tr->gamma_prime_1;
        double target = tr->reward;
        if (!tr->terminal) {
            const auto& next_q = forward(target_net, tr->next_state, scratch.target_acts);
            target = etd_target(tr->reward, next_q, gamma, g1, false);
        }
        const auto& q = forward(net, tr->state, scratch.acts);
        const double err = q[static_cast<std::size_t>(tr->action_index)] - target;
        loss += 0.5 * err * err * inv_batch;
        if (err == 0.0) continue;
        any_error = true;
        scratch.dloss[static_cast<std::size_t>(tr->action_index)] = err * inv_batch;
        backward(net, scratch.acts, scratch.dloss, scratch.grads);
        scratch.dloss[static_cast<std::size_t>(tr->action_index)] = 0.0;
    }
    if (!std::isfinite(loss)) throw std::runtime_error("train_batch: non-finite loss");
    if (!any_error) return loss;

    adam_step(net, scratch.grads, adam, lr);
    if (!all_finite(net)) throw std::runtime_error("train_batch: non-finite parameter after update");
    assert(all_finite(net));
    return loss;
}

} // namespace etdgrid
