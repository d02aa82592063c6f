#pragma once

#include <memory>

#include "serlfd/envs/config.hpp"
#include "serlfd/envs/grid_push.hpp"
#include "serlfd/envs/pacman.hpp"

namespace serlfd {

inline std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
    config.validate();
    if (config.name == "pacman") return std::make_unique<AmbiguousPacman>(config);
    return std::make_unique<GridPush>(config);
}

}  // namespace serlfd
