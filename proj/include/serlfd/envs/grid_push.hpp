#pragma once

#include <random>
#include <string>
#include <vector>

#include "serlfd/envs/config.hpp"
#include "serlfd/envs/environment.hpp"

namespace serlfd {

/// Sokoban-style pushing: move the block onto the yellow cell and the ring
/// onto the blue cell. L1 and L2 are fixed cells; which one is yellow is
/// drawn per episode.
///
/// State layout: [agent(2), block(2), ring(2), yellow(2), blue(2),
///                block_arrived, ring_arrived]
class GridPush final : public Environment {
public:
    enum Action : ActionId { up = 0, down, left, right };

    explicit GridPush(EnvConfig config) : config_(std::move(config)) {
        config_.validate();
        require(config_.name == "gridpush", "GridPush needs a gridpush config");
        step_cap_ = config_.step_cap;
    }

    std::string name() const override { return "gridpush"; }
    std::size_t state_dim() const override { return 12; }
    std::size_t action_count() const override { return 4; }
    const std::vector<std::string>& action_names() const override {
        static const std::vector<std::string> names{"up", "down", "left", "right"};
        return names;
    }
    const std::vector<std::string>& predicate_names() const override {
        static const std::vector<std::string> names{
            "is_block_pushed", "is_ring_pushed", "block_at_yellow", "block_at_blue",
            "ring_at_yellow",  "ring_at_blue",   "block_at_L1",     "block_at_L2",
            "ring_at_L1",      "ring_at_L2"};
        return names;
    }
    const EnvConfig& config() const { return config_; }

    /// True when L1 carries the yellow colour this episode.
    bool l1_is_yellow() const { return yellow_ == config_.grid_push.l1; }

    StateVec reset(std::uint64_t episode_seed) override {
        const auto& g = config_.grid_push;
        std::mt19937_64 rng(episode_seed);
        bool l1_yellow = true;
        if (g.colors == "random") l1_yellow = std::bernoulli_distribution(0.5)(rng);
        else l1_yellow = g.colors == "l1_yellow";
        yellow_ = l1_yellow ? g.l1 : g.l2;
        blue_ = l1_yellow ? g.l2 : g.l1;
        agent_ = g.agent;
        block_ = g.block;
        ring_ = g.ring;
        block_arrived_ = ring_arrived_ = false;
        steps_ = 0;
        finished_ = false;
        state_ = encode();
        return state_;
    }

    StepResult step(ActionId action) override {
        check_action(action);
        ++steps_;
        const auto& g = config_.grid_push;
        const int block_before = manhattan(block_, yellow_);
        const int ring_before = manhattan(ring_, blue_);

        const Cell target = offset(agent_, action);
        if (!is_wall(target)) {
            Cell* pushed = target == block_ ? &block_ : (target == ring_ ? &ring_ : nullptr);
            if (pushed == nullptr) {
                agent_ = target;
            } else {
                const Cell beyond = offset(target, action);
                const Cell& other = pushed == &block_ ? ring_ : block_;
                if (!is_wall(beyond) && !(beyond == other)) {
                    *pushed = beyond;
                    agent_ = target;
                }
            }
        }

        StepResult r;
        r.reward += block_before - manhattan(block_, yellow_);
        r.reward += ring_before - manhattan(ring_, blue_);
        if (!block_arrived_ && block_ == yellow_) {
            block_arrived_ = true;
            r.reward += g.arrival_bonus;
        }
        if (!ring_arrived_ && ring_ == blue_) {
            ring_arrived_ = true;
            r.reward += g.arrival_bonus;
        }
        if (block_ == yellow_ && ring_ == blue_) {
            r.reward += g.completion_bonus;
            r.done = true;
            r.success = true;
        } else if (steps_ >= step_cap_) {
            r.done = true;
        }
        state_ = encode();
        r.next_state = state_;
        finished_ = r.done;
        return r;
    }

    PredicateVector ground_predicates(std::span<const double> s) const override {
        require(s.size() == state_dim(), "gridpush: state length mismatch");
        const auto& g = config_.grid_push;
        auto cell = [&](std::size_t i) {
            return Cell{decode_coord(s[i], config_.height), decode_coord(s[i + 1], config_.width)};
        };
        const Cell block = cell(2), ring = cell(4), yellow = cell(6), blue = cell(8);
        return {{truth(!(block == g.block)), truth(!(ring == g.ring)), truth(block == yellow),
                 truth(block == blue), truth(ring == yellow), truth(ring == blue),
                 truth(block == g.l1), truth(block == g.l2), truth(ring == g.l1),
                 truth(ring == g.l2)}};
    }

    std::string render() const override {
        std::string out;
        for (int r = 0; r < config_.height; ++r) {
            for (int c = 0; c < config_.width; ++c) {
                const Cell cell{r, c};
                char ch = is_wall(cell) ? '#' : '.';
                if (cell == yellow_) ch = 'y';
                if (cell == blue_) ch = 'b';
                if (cell == block_) ch = 'B';
                if (cell == ring_) ch = 'R';
                if (cell == agent_) ch = 'A';
                out += ch;
            }
            out += '\n';
        }
        out += "step " + std::to_string(steps_) + "/" + std::to_string(step_cap_) +
               "  L1=" + (l1_is_yellow() ? "yellow" : "blue") + '\n';
        return out;
    }

private:
    bool is_wall(Cell c) const { return !config_.inside(c); }

    static Cell offset(Cell c, ActionId a) {
        switch (a) {
            case up: return {c.row - 1, c.col};
            case down: return {c.row + 1, c.col};
            case left: return {c.row, c.col - 1};
            default: return {c.row, c.col + 1};
        }
    }

    StateVec encode() const {
        StateVec s;
        s.reserve(12);
        for (Cell c : {agent_, block_, ring_, yellow_, blue_}) {
            s.push_back(encode_coord(c.row, config_.height));
            s.push_back(encode_coord(c.col, config_.width));
        }
        s.push_back(block_arrived_ ? 1.0 : 0.0);
        s.push_back(ring_arrived_ ? 1.0 : 0.0);
        return s;
    }

    EnvConfig config_;
    Cell agent_, block_, ring_, yellow_, blue_;
    bool block_arrived_ = false;
    bool ring_arrived_ = false;
};

}  // namespace serlfd
