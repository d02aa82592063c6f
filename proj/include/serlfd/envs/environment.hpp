#pragma once

#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "serlfd/error.hpp"

namespace serlfd {

using StateVec = std::vector<double>;
using ActionId = int;

/// Grounded predicate values, each exactly -1 or +1.
struct PredicateVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    bool well_formed() const {
        for (double v : values)
            if (v != 1.0 && v != -1.0) return false;
        return true;
    }
    bool operator==(const PredicateVector&) const = default;
};

inline double truth(bool b) { return b ? 1.0 : -1.0; }

struct StepResult {
    double reward = 0.0;
    StateVec next_state;
    bool done = false;
    bool success = false;
};

struct Cell {
    int row = 0;
    int col = 0;
    bool operator==(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

/// Coordinates are stored in the state as row/(height-1), col/(width-1).
inline double encode_coord(int v, int extent) { return static_cast<double>(v) / (extent - 1); }
inline int decode_coord(double x, int extent) {
    return static_cast<int>(x * (extent - 1) + (x >= 0 ? 0.5 : -0.5));
}

/// A seeded gridworld. The environment owns its current state and its
/// random stream; ground_predicates is a pure function of a state vector.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string name() const = 0;
    virtual std::size_t state_dim() const = 0;
    virtual std::size_t action_count() const = 0;
    virtual const std::vector<std::string>& action_names() const = 0;
    virtual const std::vector<std::string>& predicate_names() const = 0;

    virtual StateVec reset(std::uint64_t episode_seed) = 0;
    virtual StepResult step(ActionId action) = 0;
    virtual PredicateVector ground_predicates(std::span<const double> state) const = 0;
    virtual std::string render() const = 0;

    std::size_t predicate_count() const { return predicate_names().size(); }
    const StateVec& state() const { return state_; }
    int steps_taken() const { return steps_; }
    int step_cap() const { return step_cap_; }
    bool finished() const { return finished_; }

protected:
    void check_action(ActionId action) const {
        require(action >= 0 && static_cast<std::size_t>(action) < action_count(),
                name() + ": action " + std::to_string(action) + " out of range");
        require(!finished_, name() + ": step called on a finished episode");
    }

    StateVec state_;
    int steps_ = 0;
    int step_cap_ = 1;
    bool finished_ = false;
};

}  // namespace serlfd
