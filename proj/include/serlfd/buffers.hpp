#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "serlfd/demos.hpp"
#include "serlfd/error.hpp"

namespace serlfd {

/// A sampled record. The pointer stays valid until the owning buffer is
/// next modified.
struct BatchItem {
    const Experience* experience = nullptr;
    bool is_demo = false;
    std::uint64_t trajectory_id = 0;

    const Experience& operator*() const { return *experience; }
    const Experience* operator->() const { return experience; }
};
using Batch = std::vector<BatchItem>;

namespace detail {

struct StoredRecord {
    Experience experience;
    bool is_demo = false;
    std::uint64_t trajectory_id = 0;
};

/// Fixed-capacity FIFO ring; the oldest record is overwritten when full.
class Ring {
public:
    explicit Ring(std::size_t capacity) : capacity_(capacity) {
        require(capacity >= 1, "buffer capacity must be positive");
        records_.reserve(std::min<std::size_t>(capacity, 4096));
    }
    void push(StoredRecord r) {
        if (records_.size() < capacity_) {
            records_.push_back(std::move(r));
        } else {
            records_[head_] = std::move(r);
            head_ = (head_ + 1) % capacity_;
        }
    }
    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return records_.empty(); }
    const StoredRecord& operator[](std::size_t i) const { return records_[i]; }
    const std::vector<StoredRecord>& records() const { return records_; }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<StoredRecord> records_;
};

inline BatchItem item(const StoredRecord& r) { return {&r.experience, r.is_demo, r.trajectory_id}; }

}  // namespace detail

/// D_RL: demonstration partition kept forever plus a ring of agent
/// experience.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : agent_(capacity) {}

    void add(const Experience& e, bool is_demo, std::uint64_t trajectory_id) {
        if (is_demo) demos_.push_back({e, true, trajectory_id});
        else agent_.push({e, false, trajectory_id});
    }

    std::size_t demo_size() const { return demos_.size(); }
    std::size_t agent_size() const { return agent_.size(); }
    std::size_t size() const { return demos_.size() + agent_.size(); }
    std::size_t capacity() const { return agent_.capacity(); }
    bool empty() const { return size() == 0; }

    /// With replacement. Each draw comes from the demo partition with
    /// probability demo_fraction when both partitions are non-empty.
    template <class Rng>
    Batch sample(std::size_t batch_size, Rng& rng, double demo_fraction) const {
        require(!empty(), "sample: replay buffer is empty");
        require(batch_size >= 1, "sample: batch size must be >= 1");
        require(demo_fraction >= 0.0 && demo_fraction <= 1.0, "sample: demo_fraction must lie in [0,1]");
        Batch batch;
        batch.reserve(batch_size);
        std::bernoulli_distribution from_demo(demo_fraction);
        for (std::size_t i = 0; i < batch_size; ++i) {
            bool demo = demos_.empty() ? false : (agent_.empty() ? true : from_demo(rng));
            if (demo) batch.push_back(detail::item(demos_[uniform_index(demos_.size(), rng)]));
            else batch.push_back(detail::item(agent_[uniform_index(agent_.size(), rng)]));
        }
        return batch;
    }

    template <class Rng>
    Batch sample_demos(std::size_t batch_size, Rng& rng) const {
        require(!demos_.empty(), "sample_demos: no demonstrations loaded");
        require(batch_size >= 1, "sample: batch size must be >= 1");
        Batch batch;
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i)
            batch.push_back(detail::item(demos_[uniform_index(demos_.size(), rng)]));
        return batch;
    }

    const std::vector<detail::StoredRecord>& demo_records() const { return demos_; }

private:
    template <class Rng>
    static std::size_t uniform_index(std::size_t n, Rng& rng) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }

    std::vector<detail::StoredRecord> demos_;
    detail::Ring agent_;
};

/// D_good or D_bad: a ring of experiences tagged with their source.
class OutcomeBuffer {
public:
    explicit OutcomeBuffer(std::size_t capacity) : ring_(capacity) {}

    void add(const Experience& e, bool is_demo, std::uint64_t trajectory_id) {
        ring_.push({e, is_demo, trajectory_id});
    }
    std::size_t size() const { return ring_.size(); }
    bool empty() const { return ring_.empty(); }
    std::size_t capacity() const { return ring_.capacity(); }

    template <class Rng>
    Batch sample(std::size_t batch_size, Rng& rng) const {
        require(!empty(), "sample: outcome buffer is empty");
        require(batch_size >= 1, "sample: batch size must be >= 1");
        Batch batch;
        batch.reserve(batch_size);
        std::uniform_int_distribution<std::size_t> pick(0, ring_.size() - 1);
        for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(detail::item(ring_[pick(rng)]));
        return batch;
    }

    const std::vector<detail::StoredRecord>& records() const { return ring_.records(); }

private:
    detail::Ring ring_;
};

struct BufferCapacities {
    std::size_t replay = 100000;
    std::size_t good = 20000;
    std::size_t bad = 20000;
};

/// The three stores of the training loop plus trajectory bookkeeping.
struct BufferSet {
    ReplayBuffer rl;
    OutcomeBuffer good;
    OutcomeBuffer bad;
    std::uint64_t next_trajectory_id = 0;

    explicit BufferSet(BufferCapacities c = {}) : rl(c.replay), good(c.good), bad(c.bad) {}

    /// Appends every experience to D_RL and to D_good or D_bad by the
    /// trajectory's success flag. Returns the trajectory id assigned.
    std::uint64_t add_trajectory(const Trajectory& t, bool is_demo = false) {
        const std::uint64_t id = next_trajectory_id++;
        OutcomeBuffer& outcome = t.success ? good : bad;
        for (const auto& e : t.steps) {
            rl.add(e, is_demo, id);
            outcome.add(e, is_demo, id);
        }
        return id;
    }
};

}  // namespace serlfd
