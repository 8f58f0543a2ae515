#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "etdgrid/qlearn.hpp"
#include "etdgrid/replay.hpp"
#include "etdgrid/rng.hpp"

using namespace etdgrid;

namespace {

ReplayTransition make_transition(double reward, int action, bool terminal, double g1,
                                 std::size_t state_len) {
    ReplayTransition t;
    t.state.assign(state_len, 0.5);
    t.action_index = action;
    t.reward = reward;
    if (!terminal) t.next_state.assign(state_len, 0.5);
    t.terminal = terminal;
    t.gamma_prime_1 = g1;
    return t;
}

} // namespace

TEST_CASE("qlearn: TD target bootstraps off the best next action") {
    const std::vector<double> next_q = {0.1, 2.0, -1.0, 0.5, 1.9};
    REQUIRE(td_target(0.5, next_q, 0.99, false) == Catch::Approx(2.48).epsilon(1e-14));
    REQUIRE(td_target(0.5, next_q, 0.99, true) == 0.5);
    REQUIRE(td_target(0.5, next_q, 0.0, false) == 0.5);
}

TEST_CASE("qlearn: ETD target scales only the bootstrap term") {
    const std::vector<double> next_q = {0.1, 2.0, -1.0, 0.5, 1.9};
    REQUIRE(etd_target(0.5, next_q, 0.99, 0.9, false) == Catch::Approx(2.282).epsilon(1e-14));

    const std::vector<double> unit = {1.0, 0.0, 0.3, -2.0, 0.0};
    REQUIRE(etd_target(0.0, unit, 0.99, 0.941044, false) ==
            Catch::Approx(0.93163356).epsilon(1e-12));

    SECTION("discount of one is exactly the TD expression") {
        for (double r : {-3.0, 0.0, 0.7}) {
            REQUIRE(etd_target(r, next_q, 0.99, 1.0, false) == td_target(r, next_q, 0.99, false));
            REQUIRE(etd_target(r, next_q, 0.99, 1.0, true) == td_target(r, next_q, 0.99, true));
        }
    }
    SECTION("terminal ignores the bootstrap") {
        REQUIRE(etd_target(0.7, next_q, 0.99, 0.8, true) == 0.7);
    }
    SECTION("discounting shrinks the target when the bootstrap is positive") {
        REQUIRE(std::abs(etd_target(0.5, next_q, 0.99, 0.8, false)) <=
                std::abs(td_target(0.5, next_q, 0.99, false)));
    }
    SECTION("out-of-range discount is rejected") {
        REQUIRE_THROWS_AS(etd_target(0.0, next_q, 0.99, 0.49, false), std::invalid_argument);
        REQUIRE_THROWS_AS(etd_target(0.0, next_q, 0.99, 1.01, false), std::invalid_argument);
    }
}

TEST_CASE("qlearn: argmax breaks ties toward the lowest index") {
    REQUIRE(argmax_q({1.0, 3.0, 3.0, 0.0, 2.0}) == 1);
    REQUIRE(argmax_q({5.0, 5.0, 5.0, 5.0, 5.0}) == 0);
    REQUIRE(argmax_q({-2.0, -1.0, -3.0}) == 1);
    REQUIRE(max_q({1.0, 3.0, 3.0, 0.0, 2.0}) == 3.0);
}

TEST_CASE("qlearn: epsilon-greedy explores uniformly and exploits greedily") {
    Rng init(5);
    const Mlp net = make_mlp({3, 8, 5}, init);
    const StateVector state = {0.2, 0.6, 0.9};
    Activations acts;

    SECTION("epsilon zero is the deterministic argmax") {
        const int greedy = argmax_q(forward_value(net, state));
        Rng rng(1);
        for (int i = 0; i < 50; ++i) REQUIRE(select_action(net, state, 0.0, rng, acts) == greedy);
    }
    SECTION("epsilon one draws every action uniformly") {
        Rng rng(2);
        std::array<int, 5> counts{};
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(
            select_action(net, state, 1.0, rng, acts))]++;
        // p = 1/5: std ~ sqrt(draws*p*(1-p)) ~ 126, allow 3 sigma plus slack.
        for (int c : counts) REQUIRE(std::abs(c - draws / 5) < 600);
    }
    SECTION("bad epsilon rejected") {
        Rng rng(3);
        REQUIRE_THROWS_AS(select_action(net, state, -0.1, rng, acts), std::invalid_argument);
        REQUIRE_THROWS_AS(select_action(net, state, 1.1, rng, acts), std::invalid_argument);
    }
}

TEST_CASE("qlearn: target sync is a deep copy") {
    Rng init(6);
    Mlp net = make_mlp({3, 8, 5}, init);
    const Mlp target = sync_target(net);

    const StateVector state = {0.1, 0.5, 0.2};
    REQUIRE(forward_value(net, state) == forward_value(target, state));

    const Mlp before = target;
    net.weights[0][0] += 1.0;
    REQUIRE(target.weights[0][0] == before.weights[0][0]);
    REQUIRE(forward_value(target, state) == forward_value(before, state));
}

TEST_CASE("qlearn: replay buffer evicts FIFO and samples reproducibly") {
    ReplayBuffer buf(4);
    REQUIRE(buf.capacity() == 4);
    REQUIRE_THROWS_AS(ReplayBuffer(0), std::invalid_argument);

    for (int i = 0; i < 6; ++i) buf.push(make_transition(static_cast<double>(i), 0, true, 1.0, 2));
    REQUIRE(buf.size() == 4);
    // Pushing 0..5 through capacity 4 leaves exactly 2,3,4,5 stored.
    std::array<bool, 6> present{};
    for (std::size_t i = 0; i < buf.size(); ++i)
        present[static_cast<std::size_t>(buf.at(i).reward)] = true;
    REQUIRE_FALSE(present[0]);
    REQUIRE_FALSE(present[1]);
    for (int i = 2; i < 6; ++i) REQUIRE(present[static_cast<std::size_t>(i)]);

    SECTION("sampling is uniform over contents and deterministic per seed") {
        Rng a(7), b(7);
        const auto s1 = buf.sample(64, a);
        const auto s2 = buf.sample(64, b);
        REQUIRE(s1.size() == 64);
        for (std::size_t i = 0; i < s1.size(); ++i) REQUIRE(s1[i] == s2[i]);

        Rng c(8);
        std::array<int, 6> counts{};
        for (int round = 0; round < 500; ++round)
            for (const ReplayTransition* t : buf.sample(64, c))
                counts[static_cast<std::size_t>(t->reward)]++;
        // 32000 draws over 4 entries: expect 8000 each, std ~ 77.
        for (int i = 2; i < 6; ++i) REQUIRE(std::abs(counts[static_cast<std::size_t>(i)] - 8000) < 400);
    }
    SECTION("sampling an empty buffer is a logic error") {
        ReplayBuffer empty(4);
        Rng rng(1);
        REQUIRE_THROWS_AS(empty.sample(4, rng), std::logic_error);
    }
    SECTION("transition invariants") {
        REQUIRE_NOTHROW(make_transition(0.0, 2, false, 0.941044, 3).validate());
        ReplayTransition bad = make_transition(0.0, 2, false, 0.4, 3);
        REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = make_transition(0.0, 7, true, 1.0, 3);
        REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = make_transition(0.0, 2, true, 1.0, 3);
        bad.next_state.assign(3, 0.0); // terminal flag contradicts next_state
        REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    }
}

TEST_CASE("qlearn: train_batch loss matches hand-computed targets") {
    // Online and target nets over 2 inputs, 5 actions. The target net outputs
    // q = [0,1,2,3,4] via its biases, so max next_q = 4; the online net is zero.
    Mlp net = zero_mlp({2, 5});
    Mlp target = zero_mlp({2, 5});
    for (int j = 0; j < 5; ++j) target.biases[0][static_cast<std::size_t>(j)] = j;

    std::vector<ReplayTransition> store;
    store.push_back(make_transition(0.1, 0, false, 0.9, 2));
    store.push_back(make_transition(0.2, 1, false, 0.5, 2));
    std::vector<const ReplayTransition*> batch = {&store[0], &store[1]};

    AdamState adam;
    adam.resize_for(net);
    TrainScratch scratch;

    SECTION("ETD mode uses each sample's stored discount") {
        // Targets: 0.1 + 0.9*0.99*4 = 3.664 and 0.2 + 0.5*0.99*4 = 2.18.
        // Loss = 0.5 * (3.664^2 + 2.18^2) / 2 = 4.544324.
        Mlp n = net;
        const double loss = train_batch(n, target, adam, batch, 0.99, 1e-3, UpdateMode::etd, scratch);
        REQUIRE(loss == Catch::Approx(4.544324).epsilon(1e-12));
        REQUIRE(adam.step == 1);
    }
    SECTION("TD mode ignores the stored discounts") {
        // Targets: 0.1 + 0.99*4 = 4.06 and 0.2 + 0.99*4 = 4.16; loss = 8.4473.
        Mlp n = net;
        const double loss = train_batch(n, target, adam, batch, 0.99, 1e-3, UpdateMode::td, scratch);
        REQUIRE(loss == Catch::Approx(8.4473).epsilon(1e-12));
    }
    SECTION("empty batch is rejected") {
        std::vector<const ReplayTransition*> none;
        REQUIRE_THROWS_AS(train_batch(net, target, adam, none, 0.99, 1e-3, UpdateMode::td, scratch),
                          std::invalid_argument);
    }
}

TEST_CASE("qlearn: zero-error batches are a fixed point") {
    // Zero net, terminal transitions with zero reward: target = 0 = Q(s,a).
    Mlp net = zero_mlp({2, 5});
    const Mlp before = net;
    const Mlp target = sync_target(net);
    AdamState adam;
    adam.resize_for(net);
    TrainScratch scratch;

    std::vector<ReplayTransition> store;
    store.push_back(make_transition(0.0, 1, true, 1.0, 2));
    store.push_back(make_transition(0.0, 3, true, 0.9, 2));
    std::vector<const ReplayTransition*> batch = {&store[0], &store[1]};

    const double loss = train_batch(net, target, adam, batch, 0.99, 1e-3, UpdateMode::etd, scratch);
    REQUIRE(loss == 0.0);
    REQUIRE(adam.step == 0); // skipped outright, not even a zero-gradient Adam step
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].size(); ++i)
            REQUIRE(net.weights[l][i] == before.weights[l][i]);
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            REQUIRE(net.biases[l][i] == before.biases[l][i]);
    }
}

TEST_CASE("qlearn: ETD with unit discounts is bit-identical to TD") {
    Rng init(99);
    const Mlp base = make_mlp({4, 16, 5}, init);

    std::vector<ReplayTransition> store;
    Rng data(100);
    for (int i = 0; i < 64; ++i) {
        ReplayTransition t;
        t.state.assign(4, 0.0);
        for (double& v : t.state) v = data.next_double();
        t.action_index = static_cast<int>(data.next_below(5));
        t.reward = data.normal();
        t.terminal = i % 7 == 0;
        if (!t.terminal) {
            t.next_state.assign(4, 0.0);
            for (double& v : t.next_state) v = data.next_double();
        }
        t.gamma_prime_1 = 1.0;
        store.push_back(t);
    }
    std::vector<const ReplayTransition*> batch;
    for (const auto& t : store) batch.push_back(&t);

    Mlp net_td = base, net_etd = base;
    const Mlp target = sync_target(base);
    AdamState adam_td, adam_etd;
    adam_td.resize_for(net_td);
    adam_etd.resize_for(net_etd);
    TrainScratch s1, s2;

    for (int step = 0; step < 10; ++step) {
        const double l1 = train_batch(net_td, target, adam_td, batch, 0.99, 1e-3, UpdateMode::td, s1);
        const double l2 = train_batch(net_etd, target, adam_etd, batch, 0.99, 1e-3, UpdateMode::etd, s2);
        REQUIRE(l1 == l2);
    }
    for (std::size_t l = 0; l < net_td.weights.size(); ++l) {
        for (std::size_t i = 0; i < net_td.weights[l].size(); ++i)
            REQUIRE(net_td.weights[l][i] == net_etd.weights[l][i]);
        for (std::size_t i = 0; i < net_td.biases[l].size(); ++i)
            REQUIRE(net_td.biases[l][i] == net_etd.biases[l][i]);
    }
}

TEST_CASE("qlearn: repeated updates shrink the loss on a fixed batch") {
    Rng init(123);
    Mlp net = make_mlp({4, 16, 5}, init);
    const Mlp target = sync_target(net);
    AdamState adam;
    adam.resize_for(net);
    TrainScratch scratch;

    std::vector<ReplayTransition> store;
    Rng data(124);
    for (int i = 0; i < 32; ++i) {
        ReplayTransition t;
        t.state.assign(4, 0.0);
        for (double& v : t.state) v = data.next_double();
        t.action_index = static_cast<int>(data.next_below(5));
        t.reward = data.normal();
        t.terminal = true; // constant targets, so the regression must converge
        t.gamma_prime_1 = 1.0;
        store.push_back(t);
    }
    std::vector<const ReplayTransition*> batch;
    for (const auto& t : store) batch.push_back(&t);

    const double first = train_batch(net, target, adam, batch, 0.99, 1e-2, UpdateMode::td, scratch);
    double last = first;
    for (int i = 0; i < 500; ++i)
        last = train_batch(net, target, adam, batch, 0.99, 1e-2, UpdateMode::td, scratch);
    REQUIRE(last < 0.1 * first);
    REQUIRE(all_finite(net));
}
