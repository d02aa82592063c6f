#pragma once

#include <string>
#include <vector>

#include "serlfd/envs/environment.hpp"

namespace serlfd {

struct PacmanConfig {
    int ghost_count = 1;
    /// Steps the power pellet lasts after the eating step.
    int ghost_timer = 4;
    /// ghost_nearby holds when an alive ghost is within this Manhattan distance.
    int nearby_threshold = 2;
    Cell pellet{1, 1};
    Cell start{5, 5};
    /// "far": ghosts spawn at least spawn_min_distance from the pellet.
    /// "near_pellet": ghosts spawn within near_spawn_max_distance of it.
    std::string ghost_spawn = "far";
    int spawn_min_distance = 4;
    int near_spawn_max_distance = 2;
    std::vector<Cell> walls;  // interior walls; the border is always walled
};

struct GridPushConfig {
    Cell l1{2, 4};
    Cell l2{4, 2};
    Cell block{2, 2};
    Cell ring{4, 4};
    Cell agent{3, 3};
    /// "random" draws the colour assignment per episode; "l1_yellow" and
    /// "l1_blue" pin it.
    std::string colors = "random";
    double arrival_bonus = 25.0;
    double completion_bonus = 50.0;
};

struct EnvConfig {
    std::string name = "pacman";
    int width = 7;
    int height = 7;
    int step_cap = 200;
    PacmanConfig pacman;
    GridPushConfig grid_push;

    static EnvConfig defaults_for(const std::string& env_name) {
        EnvConfig c;
        c.name = env_name;
        if (env_name == "gridpush") c.step_cap = 100;
        return c;
    }

    bool inside(Cell c) const { return c.row >= 1 && c.col >= 1 && c.row <= height - 2 && c.col <= width - 2; }

    void validate() const {
        require(name == "pacman" || name == "gridpush", "unknown environment '" + name + "'");
        require(width >= 3 && height >= 3, "grid dimensions must be at least 3x3");
        require(step_cap >= 1, "step cap must be >= 1");
        if (name == "pacman") {
            const auto& p = pacman;
            require(p.ghost_count >= 1, "pacman needs at least one ghost");
            require(p.ghost_timer >= 1, "ghost timer must be >= 1");
            require(p.nearby_threshold >= 0, "nearby threshold must be >= 0");
            require(inside(p.pellet) && inside(p.start), "pellet and start must be interior cells");
            require(p.ghost_spawn == "far" || p.ghost_spawn == "near_pellet",
                    "ghost_spawn must be 'far' or 'near_pellet'");
            for (auto w : p.walls) {
                require(inside(w), "walls must be interior cells");
                require(!(w == p.pellet) && !(w == p.start), "wall on pellet or start cell");
            }
        } else {
            const auto& g = grid_push;
            for (auto c : {g.l1, g.l2, g.block, g.ring, g.agent})
                require(inside(c), "gridpush cells must be interior");
            require(!(g.l1 == g.l2), "L1 and L2 must differ");
            require(!(g.block == g.ring) && !(g.block == g.agent) && !(g.ring == g.agent),
                    "block, ring and agent must start on distinct cells");
            require(g.colors == "random" || g.colors == "l1_yellow" || g.colors == "l1_blue",
                    "colors must be random, l1_yellow or l1_blue");
        }
    }
};

}  // namespace serlfd
