#pragma once

// Trajectories, rollouts and the line-delimited JSON trajectory file.
//
// File layout: first line is a header object
//   {"format":"serlfd-trajectories","version":1}
// followed by one trajectory object per line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "serlfd/envs/environment.hpp"
#include "serlfd/error.hpp"

namespace serlfd {

struct Experience {
    StateVec state;
    ActionId action = 0;
    double reward = 0.0;
    StateVec next_state;
    bool done = false;
    PredicateVector predicates;
    PredicateVector next_predicates;

    bool operator==(const Experience&) const = default;
};

struct Trajectory {
    std::vector<Experience> steps;
    bool success = false;
    std::string env_name;
    std::uint64_t episode_seed = 0;

    double total_reward() const {
        double sum = 0.0;
        for (const auto& e : steps) sum += e.reward;
        return sum;
    }
    bool operator==(const Trajectory&) const = default;
};

inline bool is_success(const Trajectory& t) { return t.success; }

/// Builds an experience from a transition, caching predicates for both ends.
inline Experience make_experience(const Environment& env, const StateVec& state, ActionId action,
                                  const StepResult& result) {
    return {state,
            action,
            result.reward,
            result.next_state,
            result.done,
            env.ground_predicates(state),
            env.ground_predicates(result.next_state)};
}

using ActionChooser = std::function<ActionId(const Environment&, const StateVec&)>;

/// Runs one complete episode from reset(episode_seed).
inline Trajectory rollout(Environment& env, std::uint64_t episode_seed, const ActionChooser& choose) {
    Trajectory t;
    t.env_name = env.name();
    t.episode_seed = episode_seed;
    StateVec s = env.reset(episode_seed);
    while (true) {
        const ActionId a = choose(env, s);
        StepResult r = env.step(a);
        t.success = t.success || r.success;
        t.steps.push_back(make_experience(env, s, a, r));
        if (r.done) break;
        s = std::move(r.next_state);
    }
    return t;
}

inline constexpr const char* kTrajectoryFormat = "serlfd-trajectories";
inline constexpr int kTrajectoryVersion = 1;

namespace detail {

inline nlohmann::json to_json(const Trajectory& t) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& e : t.steps) {
        steps.push_back({{"s", e.state},
                         {"a", e.action},
                         {"r", e.reward},
                         {"s2", e.next_state},
                         {"done", e.done},
                         {"p", e.predicates.values},
                         {"p2", e.next_predicates.values}});
    }
    return {{"env", t.env_name}, {"episode_seed", t.episode_seed}, {"success", t.success}, {"steps", steps}};
}

inline Trajectory from_json(const nlohmann::json& j) {
    Trajectory t;
    t.env_name = j.at("env").get<std::string>();
    t.episode_seed = j.at("episode_seed").get<std::uint64_t>();
    t.success = j.at("success").get<bool>();
    for (const auto& s : j.at("steps")) {
        Experience e;
        e.state = s.at("s").get<std::vector<double>>();
        e.action = s.at("a").get<ActionId>();
        e.reward = s.at("r").get<double>();
        e.next_state = s.at("s2").get<std::vector<double>>();
        e.done = s.at("done").get<bool>();
        e.predicates.values = s.at("p").get<std::vector<double>>();
        e.next_predicates.values = s.at("p2").get<std::vector<double>>();
        t.steps.push_back(std::move(e));
    }
    return t;
}

}  // namespace detail

/// Checks contiguity, termination and the predicate cache of a trajectory
/// against an environment. Returns an empty string when valid.
inline std::string validate_trajectory(const Trajectory& t, const Environment& env) {
    if (t.env_name != env.name()) return "environment '" + t.env_name + "' != '" + env.name() + "'";
    if (t.steps.empty()) return "empty trajectory";
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const auto& e = t.steps[i];
        const std::string at = "step " + std::to_string(i) + ": ";
        if (e.state.size() != env.state_dim() || e.next_state.size() != env.state_dim())
            return at + "state length mismatch";
        if (e.action < 0 || static_cast<std::size_t>(e.action) >= env.action_count())
            return at + "action out of range";
        if (!e.predicates.well_formed() || !e.next_predicates.well_formed())
            return at + "predicate value not in {-1,+1}";
        if (!(e.predicates == env.ground_predicates(e.state)) ||
            !(e.next_predicates == env.ground_predicates(e.next_state)))
            return at + "cached predicates disagree with grounding";
        if (i + 1 < t.steps.size()) {
            if (e.done) return at + "done before the last step";
            if (e.next_state != t.steps[i + 1].state) return at + "not contiguous with the next step";
        }
    }
    if (!t.steps.back().done && static_cast<int>(t.steps.size()) != env.step_cap())
        return "last step is neither done nor at the step cap";
    return {};
}

inline void save_trajectories(const std::vector<Trajectory>& trajectories, const std::string& path) {
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << nlohmann::json{{"format", kTrajectoryFormat}, {"version", kTrajectoryVersion}}.dump() << '\n';
        for (const auto& t : trajectories) out << detail::to_json(t).dump() << '\n';
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

/// Loads trajectories and re-validates each against env. Unsuccessful
/// trajectories are accepted but reported through warnings when given.
inline std::vector<Trajectory> load_trajectories(const std::string& path, const Environment& env,
                                                 std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read trajectory file " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": missing header line");
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.at("format") != kTrajectoryFormat) throw Error(path + ": not a trajectory file");
        if (header.at("version") != kTrajectoryVersion)
            throw Error(path + ": unsupported version " + header.at("version").dump());
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": bad header: " + e.what());
    }
    std::vector<Trajectory> out;
    for (std::size_t index = 0; std::getline(in, line);) {
        if (line.empty()) continue;
        const std::string where = path + ": trajectory " + std::to_string(index);
        Trajectory t;
        try {
            t = detail::from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw Error(where + ": corrupted record: " + e.what());
        }
        if (auto problem = validate_trajectory(t, env); !problem.empty()) throw Error(where + ": " + problem);
        if (!t.success && warnings != nullptr) warnings->push_back(where + " is unsuccessful");
        out.push_back(std::move(t));
        ++index;
    }
    return out;
}

}  // namespace serlfd
