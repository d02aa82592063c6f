#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "serlfd/envs/config.hpp"
#include "serlfd/envs/environment.hpp"

namespace serlfd {

/// Pacman must eat every randomly wandering ghost while the power pellet is
/// active. Reward 1 on completion, 0 otherwise. The episode fails when the
/// pellet wears off with ghosts alive or the step cap is reached.
///
/// State layout: [pac_row, pac_col, (ghost_row, ghost_col, ghost_alive) * G,
///                pellet_eaten, timer_remaining / ghost_timer]
class AmbiguousPacman final : public Environment {
public:
    enum Action : ActionId { up = 0, down, left, right, stay };

    explicit AmbiguousPacman(EnvConfig config) : config_(std::move(config)) {
        config_.validate();
        require(config_.name == "pacman", "AmbiguousPacman needs a pacman config");
        step_cap_ = config_.step_cap;
        const auto& p = config_.pacman;
        for (int r = 1; r <= config_.height - 2; ++r)
            for (int c = 1; c <= config_.width - 2; ++c) {
                Cell cell{r, c};
                if (is_wall(cell) || cell == p.start) continue;
                const int d = manhattan(cell, p.pellet);
                if (p.ghost_spawn == "far" ? d >= p.spawn_min_distance
                                           : (d >= 1 && d <= p.near_spawn_max_distance))
                    spawn_cells_.push_back(cell);
            }
        require(!spawn_cells_.empty(), "pacman: no valid ghost spawn cell");
        ghosts_.resize(static_cast<std::size_t>(p.ghost_count));
        alive_.resize(ghosts_.size());
    }

    std::string name() const override { return "pacman"; }
    std::size_t state_dim() const override { return 4 + 3 * ghosts_.size(); }
    std::size_t action_count() const override { return 5; }
    const std::vector<std::string>& action_names() const override {
        static const std::vector<std::string> names{"up", "down", "left", "right", "stay"};
        return names;
    }
    const std::vector<std::string>& predicate_names() const override {
        static const std::vector<std::string> names{"ghost_nearby", "eat_capsule"};
        return names;
    }
    const EnvConfig& config() const { return config_; }

    StateVec reset(std::uint64_t episode_seed) override {
        rng_.seed(episode_seed);
        pac_ = config_.pacman.start;
        std::uniform_int_distribution<std::size_t> pick(0, spawn_cells_.size() - 1);
        for (std::size_t g = 0; g < ghosts_.size(); ++g) {
            ghosts_[g] = spawn_cells_[pick(rng_)];
            alive_[g] = true;
        }
        pellet_eaten_ = false;
        timer_ = 0;
        steps_ = 0;
        finished_ = false;
        state_ = encode();
        return state_;
    }

    StepResult step(ActionId action) override {
        check_action(action);
        ++steps_;
        const Cell before = pac_;
        pac_ = moved(pac_, action);
        if (!pellet_eaten_ && pac_ == config_.pacman.pellet) {
            pellet_eaten_ = true;
            timer_ = config_.pacman.ghost_timer + 1;  // the eating step does not count
        }
        if (timer_ > 0) capture_at(pac_);

        for (std::size_t g = 0; g < ghosts_.size(); ++g) {
            if (!alive_[g]) continue;
            const Cell from = ghosts_[g];
            ghosts_[g] = random_neighbour(from);
            if (timer_ > 0 && (ghosts_[g] == pac_ || (ghosts_[g] == before && from == pac_)))
                alive_[g] = false;
        }

        StepResult r;
        const bool all_eaten = std::none_of(alive_.begin(), alive_.end(), [](bool a) { return a; });
        if (all_eaten) {
            r.reward = 1.0;
            r.done = true;
            r.success = true;
        } else {
            if (timer_ > 0 && --timer_ == 0) r.done = true;
            if (steps_ >= step_cap_) r.done = true;
        }
        state_ = encode();
        r.next_state = state_;
        finished_ = r.done;
        return r;
    }

    PredicateVector ground_predicates(std::span<const double> s) const override {
        require(s.size() == state_dim(), "pacman: state length mismatch");
        const Cell pac{decode_coord(s[0], config_.height), decode_coord(s[1], config_.width)};
        bool nearby = false;
        for (std::size_t g = 0; g < ghosts_.size(); ++g) {
            const double* gs = s.data() + 2 + 3 * g;
            if (gs[2] <= 0.5) continue;
            const Cell ghost{decode_coord(gs[0], config_.height), decode_coord(gs[1], config_.width)};
            nearby = nearby || manhattan(pac, ghost) <= config_.pacman.nearby_threshold;
        }
        const bool eaten = s[2 + 3 * ghosts_.size()] > 0.5;
        return {{truth(nearby), truth(eaten)}};
    }

    std::string render() const override {
        std::string out;
        for (int r = 0; r < config_.height; ++r) {
            for (int c = 0; c < config_.width; ++c) {
                const Cell cell{r, c};
                char ch = is_wall(cell) ? '#' : '.';
                if (!pellet_eaten_ && cell == config_.pacman.pellet) ch = 'o';
                for (std::size_t g = 0; g < ghosts_.size(); ++g)
                    if (alive_[g] && ghosts_[g] == cell) ch = timer_ > 0 ? 'g' : 'G';
                if (cell == pac_) ch = 'P';
                out += ch;
            }
            out += '\n';
        }
        out += "step " + std::to_string(steps_) + "/" + std::to_string(step_cap_);
        if (timer_ > 0) out += "  power " + std::to_string(timer_);
        out += '\n';
        return out;
    }

    bool is_wall(Cell c) const {
        if (!config_.inside(c)) return true;
        return std::find(config_.pacman.walls.begin(), config_.pacman.walls.end(), c) !=
               config_.pacman.walls.end();
    }

private:
    Cell moved(Cell c, ActionId a) const {
        Cell n = c;
        switch (a) {
            case up: --n.row; break;
            case down: ++n.row; break;
            case left: --n.col; break;
            case right: ++n.col; break;
            default: break;
        }
        return is_wall(n) ? c : n;
    }

    Cell random_neighbour(Cell c) {
        Cell options[4];
        int n = 0;
        for (ActionId a : {up, down, left, right}) {
            const Cell m = moved(c, a);
            if (!(m == c)) options[n++] = m;
        }
        if (n == 0) return c;
        std::uniform_int_distribution<int> pick(0, n - 1);
        return options[pick(rng_)];
    }

    void capture_at(Cell pac) {
        for (std::size_t g = 0; g < ghosts_.size(); ++g)
            if (alive_[g] && ghosts_[g] == pac) alive_[g] = false;
    }

    StateVec encode() const {
        StateVec s;
        s.reserve(state_dim());
        s.push_back(encode_coord(pac_.row, config_.height));
        s.push_back(encode_coord(pac_.col, config_.width));
        for (std::size_t g = 0; g < ghosts_.size(); ++g) {
            s.push_back(encode_coord(ghosts_[g].row, config_.height));
            s.push_back(encode_coord(ghosts_[g].col, config_.width));
            s.push_back(alive_[g] ? 1.0 : 0.0);
        }
        s.push_back(pellet_eaten_ ? 1.0 : 0.0);
        s.push_back(static_cast<double>(std::max(timer_, 0)) / config_.pacman.ghost_timer);
        return s;
    }

    EnvConfig config_;
    std::vector<Cell> spawn_cells_;
    std::mt19937_64 rng_;
    Cell pac_;
    std::vector<Cell> ghosts_;
    std::vector<bool> alive_;
    bool pellet_eaten_ = false;
    int timer_ = 0;
};

}  // namespace serlfd
