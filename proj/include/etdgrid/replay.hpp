#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "etdgrid/battery.hpp"
#include "etdgrid/env.hpp"
#include "etdgrid/rng.hpp"

namespace etdgrid {

// One stored experience. gamma_prime_1 is captured at insertion time from
// whatever discount schedule was active, so replayed samples keep the
// uncertainty they were generated under. Terminal transitions carry an
// empty next_state.
struct ReplayTransition {
    StateVector state;
    int action_index = 0;
    double reward = 0.0;
    StateVector next_state;
    bool terminal = false;
    double gamma_prime_1 = 1.0;

    void validate() const {
        if (action_index < 0 || action_index >= kActionCount)
            throw std::invalid_argument("replay: action index out of range");
        if (!(gamma_prime_1 >= 0.5 && gamma_prime_1 <= 1.0))
            throw std::invalid_argument("replay: gamma_prime_1 must be in [0.5, 1]");
        if (terminal != next_state.empty())
            throw std::invalid_argument("replay: next_state must be empty exactly when terminal");
    }
};

// Fixed-capacity ring buffer with strict FIFO eviction and uniform
// with-replacement sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("replay: capacity must be positive");
        store_.reserve(capacity_);
    }

    std::size_t size() const { return store_.size(); }
    std::size_t capacity() const { return capacity_; }

    void push(ReplayTransition t) {
        t.validate();
        if (store_.size() < capacity_) {
            store_.push_back(std::move(t));
        } else {
            store_[write_] = std::move(t);
        }
        write_ = (write_ + 1) % capacity_;
    }

    const ReplayTransition& at(std::size_t i) const { return store_.at(i); }

    // Uniform over current contents, with replacement; draw order is the
    // output order, so a fixed rng state reproduces the batch exactly.
    std::vector<const ReplayTransition*> sample(std::size_t batch, Rng& rng) const {
        if (store_.empty()) throw std::logic_error("replay: sample from empty buffer");
        std::vector<const ReplayTransition*> out(batch);
        for (std::size_t i = 0; i < batch; ++i)
            out[i] = &store_[rng.next_below(static_cast<std::uint32_t>(store_.size()))];
        return out;
    }

  private:
    std::size_t capacity_;
    std::size_t write_ = 0;
    std::vector<ReplayTransition> store_;
};

} // namespace etdgrid
