#pragma once

// Scripted stand-ins for a human demonstrator, so demonstration files can be
// regenerated without a terminal.

#include <map>
#include <queue>
#include <string>
#include <vector>

#include "serlfd/demos.hpp"
#include "serlfd/envs/grid_push.hpp"
#include "serlfd/envs/pacman.hpp"

namespace serlfd {

/// Walks to the pellet, eats it at once, then chases the nearest live ghost.
inline ActionId pacman_rush(const Environment& env, const StateVec& s) {
    const auto& pac_env = dynamic_cast<const AmbiguousPacman&>(env);
    const auto& cfg = pac_env.config();
    const Cell pac{decode_coord(s[0], cfg.height), decode_coord(s[1], cfg.width)};
    const std::size_t ghosts = static_cast<std::size_t>(cfg.pacman.ghost_count);
    Cell target = cfg.pacman.pellet;
    if (s[2 + 3 * ghosts] > 0.5) {
        int best = 1 << 20;
        for (std::size_t g = 0; g < ghosts; ++g) {
            if (s[2 + 3 * g + 2] <= 0.5) continue;
            const Cell ghost{decode_coord(s[2 + 3 * g], cfg.height), decode_coord(s[3 + 3 * g], cfg.width)};
            if (manhattan(pac, ghost) < best) {
                best = manhattan(pac, ghost);
                target = ghost;
            }
        }
    }
    const Cell moves[5] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {0, 0}};
    ActionId choice = AmbiguousPacman::stay;
    int best = manhattan(pac, target);
    for (ActionId a = 0; a < 4; ++a) {
        const Cell n{pac.row + moves[a].row, pac.col + moves[a].col};
        if (pac_env.is_wall(n)) continue;
        if (manhattan(n, target) < best) {
            best = manhattan(n, target);
            choice = a;
        }
    }
    return choice;
}

/// Shortest action sequence that solves a GridPush episode from reset,
/// found by breadth-first search over the deterministic dynamics.
inline std::vector<ActionId> grid_push_plan(const GridPush& start) {
    std::map<StateVec, std::pair<StateVec, ActionId>> parent;
    std::queue<GridPush> frontier;
    frontier.push(start);
    parent[start.state()] = {{}, -1};
    while (!frontier.empty()) {
        GridPush node = frontier.front();
        frontier.pop();
        for (ActionId a = 0; a < static_cast<ActionId>(node.action_count()); ++a) {
            GridPush next = node;
            const StepResult r = next.step(a);
            if (parent.count(r.next_state)) continue;
            parent[r.next_state] = {node.state(), a};
            if (r.success) {
                std::vector<ActionId> plan;
                for (StateVec s = r.next_state; parent[s].second >= 0; s = parent[s].first)
                    plan.insert(plan.begin(), parent[s].second);
                return plan;
            }
            if (!r.done) frontier.push(next);
        }
    }
    throw Error("gridpush: no solution from this start");
}

/// `count` successful scripted demonstrations. Episode seeds start at
/// first_seed; failed attempts are skipped.
inline std::vector<Trajectory> scripted_demonstrations(const EnvConfig& config, int count,
                                                       std::uint64_t first_seed = 1, int max_attempts = 1000) {
    std::vector<Trajectory> out;
    for (std::uint64_t seed = first_seed; static_cast<int>(out.size()) < count; ++seed) {
        if (static_cast<int>(seed - first_seed) >= max_attempts)
            throw Error("scripted demonstrator: too few successful episodes");
        Trajectory t;
        if (config.name == "pacman") {
            AmbiguousPacman env(config);
            t = rollout(env, seed, pacman_rush);
        } else if (config.name == "gridpush") {
            GridPush env(config);
            env.reset(seed);
            const auto plan = grid_push_plan(env);
            std::size_t i = 0;
            t = rollout(env, seed, [&](const Environment&, const StateVec&) { return plan.at(i++); });
        } else {
            throw Error("scripted demonstrator: unknown environment " + config.name);
        }
        if (t.success) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace serlfd
