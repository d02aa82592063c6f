#pragma once

// Enumerable MDPs and maximum-entropy value iteration, used as oracles for
// the function-approximation agent.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <span>
#include <vector>

#include "serlfd/error.hpp"

namespace serlfd {

struct TabularOutcome {
    double probability = 1.0;
    std::size_t next_state = 0;
    double reward = 0.0;
    bool terminal = false;
};

struct TabularMdp {
    std::size_t state_count = 0;
    std::size_t action_count = 0;
    /// outcomes[s * action_count + a]
    std::vector<std::vector<TabularOutcome>> outcomes;

    TabularMdp() = default;
    TabularMdp(std::size_t states, std::size_t actions)
        : state_count(states), action_count(actions), outcomes(states * actions) {}

    std::vector<TabularOutcome>& at(std::size_t s, std::size_t a) { return outcomes[s * action_count + a]; }
    const std::vector<TabularOutcome>& at(std::size_t s, std::size_t a) const {
        return outcomes[s * action_count + a];
    }

    void validate() const {
        require(state_count >= 1 && action_count >= 1, "MDP must have states and actions");
        require(outcomes.size() == state_count * action_count, "MDP outcome table has the wrong size");
        for (const auto& list : outcomes) {
            require(!list.empty(), "every (s,a) needs at least one outcome");
            double total = 0.0;
            for (const auto& o : list) {
                require(o.probability >= 0.0, "negative transition probability");
                require(o.next_state < state_count, "next state out of range");
                total += o.probability;
            }
            require(std::abs(total - 1.0) < 1e-9, "transition probabilities must sum to 1");
        }
    }
};

/// Adds lambda * phi(s') - phi(s) to every reward, with phi(terminal) = 0.
inline TabularMdp potential_shaped(const TabularMdp& mdp, std::span<const double> phi, double lambda) {
    require(phi.size() == mdp.state_count, "potential must have one value per state");
    TabularMdp out = mdp;
    for (std::size_t s = 0; s < mdp.state_count; ++s)
        for (std::size_t a = 0; a < mdp.action_count; ++a)
            for (auto& o : out.at(s, a))
                o.reward += (o.terminal ? 0.0 : lambda * phi[o.next_state]) - phi[s];
    return out;
}

struct SoftValueResult {
    std::vector<double> values;
    /// q[s * action_count + a]
    std::vector<double> q;
    std::vector<std::size_t> greedy;
    int iterations = 0;
};

/// Fixed point of V(s) = alpha log sum_a exp(Q(s,a) / alpha),
/// Q(s,a) = E[r + gamma (1 - terminal) V(s')].
inline SoftValueResult soft_value_iteration(const TabularMdp& mdp, double alpha, double gamma,
                                            double tolerance = 1e-10, int max_iterations = 1000000) {
    mdp.validate();
    require(alpha > 0.0, "alpha must be positive");
    require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0,1)");
    const std::size_t S = mdp.state_count, A = mdp.action_count;
    SoftValueResult r;
    r.values.assign(S, 0.0);
    r.q.assign(S * A, 0.0);
    std::vector<double> next(S);
    for (int it = 1; it <= max_iterations; ++it) {
        double change = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                double q = 0.0;
                for (const auto& o : mdp.at(s, a))
                    q += o.probability * (o.reward + (o.terminal ? 0.0 : gamma * r.values[o.next_state]));
                r.q[s * A + a] = q;
                top = std::max(top, q);
            }
            double sum = 0.0;
            for (std::size_t a = 0; a < A; ++a) sum += std::exp((r.q[s * A + a] - top) / alpha);
            next[s] = top + alpha * std::log(sum);
            change = std::max(change, std::abs(next[s] - r.values[s]));
        }
        r.values.swap(next);
        r.iterations = it;
        if (change < tolerance) {
            r.greedy.resize(S);
            for (std::size_t s = 0; s < S; ++s) {
                const auto first = r.q.begin() + static_cast<std::ptrdiff_t>(s * A);
                r.greedy[s] = static_cast<std::size_t>(std::max_element(first, first + static_cast<std::ptrdiff_t>(A)) - first);
            }
            return r;
        }
    }
    throw Error("soft_value_iteration: no convergence within " + std::to_string(max_iterations) + " iterations");
}

/// Deterministic rows x cols gridworld: actions up/down/left/right, moving
/// into the border leaves the agent in place, entering the goal pays
/// goal_reward and terminates; every other step pays step_reward.
inline TabularMdp grid_world(std::size_t rows, std::size_t cols, std::size_t goal, double goal_reward = 1.0,
                             double step_reward = 0.0) {
    require(goal < rows * cols, "goal out of range");
    TabularMdp mdp(rows * cols, 4);
    for (std::size_t s = 0; s < rows * cols; ++s) {
        const long r = static_cast<long>(s / cols), c = static_cast<long>(s % cols);
        const long dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
        for (std::size_t a = 0; a < 4; ++a) {
            long nr = r + dr[a], nc = c + dc[a];
            if (nr < 0 || nc < 0 || nr >= static_cast<long>(rows) || nc >= static_cast<long>(cols)) {
                nr = r;
                nc = c;
            }
            const auto ns = static_cast<std::size_t>(nr) * cols + static_cast<std::size_t>(nc);
            const bool at_goal = ns == goal;
            mdp.at(s, a) = {{1.0, ns, at_goal ? goal_reward : step_reward, at_goal}};
        }
    }
    return mdp;
}

}  // namespace serlfd
