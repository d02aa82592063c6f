#pragma once

// Experiment configuration, read from a JSON document. Every key is
// optional; unknown keys are rejected so typos do not silently fall back to
// defaults.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "serlfd/agent.hpp"
#include "serlfd/buffers.hpp"
#include "serlfd/envs/config.hpp"

namespace serlfd {

struct ExplainerConfig {
    std::vector<std::size_t> hidden{32};
    Activation hidden_activation = Activation::relu;
    AdamConfig adam;
    /// Samples drawn from each of D_good and D_bad per step.
    std::size_t batch_size = 32;
    /// Start from all-zero parameters (u = 0 everywhere).
    bool zero_init = false;
    /// Never update the SE-Net.
    bool frozen = false;
};

struct DiscriminatorConfig {
    std::vector<std::size_t> hidden{32};
    Activation hidden_activation = Activation::relu;
    AdamConfig adam;
    std::size_t batch_size = 32;
};

struct ExperimentConfig {
    EnvConfig env;
    SoftQConfig agent;
    ExplainerConfig se;
    DiscriminatorConfig discriminator;
    /// none | se_full | se_nu | se_nrs | se_ntr | sa_gan_gcl
    std::string mode = "se_full";
    /// Label used in output file names; defaults to the mode.
    std::string variant;
    int episodes = 1000;
    std::vector<std::uint64_t> seeds{1};
    int initial_random_trajectories = 20;
    int eval_window = 100;
    int greedy_eval_interval = 100;
    int greedy_eval_episodes = 10;
    /// Gradient steps happen every update_every environment steps,
    /// steps_per_env_step of them each time.
    int update_every = 1;
    int steps_per_env_step = 1;
    BufferCapacities buffers;
    std::string demos;
    std::string output_dir = "runs";

    bool imitation() const { return mode == "sa_gan_gcl"; }
    AugmentationMode augmentation() const { return imitation() ? AugmentationMode::none : mode_from_string(mode); }
    std::string label() const { return variant.empty() ? mode : variant; }

    void validate() const {
        env.validate();
        agent.validate();
        if (!imitation()) (void)mode_from_string(mode);
        require(episodes >= 1, "episodes must be >= 1");
        require(!seeds.empty(), "seed list must be non-empty");
        require(initial_random_trajectories >= 0, "initial_random_trajectories must be >= 0");
        require(eval_window >= 1, "eval_window must be >= 1");
        require(greedy_eval_interval >= 0 && greedy_eval_episodes >= 0, "greedy eval settings must be >= 0");
        require(update_every >= 1 && steps_per_env_step >= 0, "update cadence must be positive");
        require(se.batch_size >= 1 && discriminator.batch_size >= 1, "batch sizes must be >= 1");
    }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    require(j.is_object(), where + " must be an object");
    for (const auto& [key, value] : j.items())
        require(allowed.count(key) == 1, "unknown config key '" + where + "." + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

inline void read_cell(const json& j, const char* key, Cell& c) {
    if (!j.contains(key)) return;
    const auto v = j.at(key).get<std::vector<int>>();
    require(v.size() == 2, std::string(key) + " must be [row, col]");
    c = {v[0], v[1]};
}

inline void read_activation(const json& j, const char* key, Activation& a) {
    if (j.contains(key)) a = activation_from_string(j.at(key).get<std::string>());
}

inline void read_adam(const json& j, AdamConfig& a) {
    read(j, "learning_rate", a.learning_rate);
    read(j, "beta1", a.beta1);
    read(j, "beta2", a.beta2);
    read(j, "epsilon", a.epsilon);
}

inline EnvConfig parse_env(const json& j) {
    check_keys(j, {"name", "width", "height", "step_cap", "pacman", "gridpush"}, "env");
    EnvConfig c = EnvConfig::defaults_for(j.value("name", std::string("pacman")));
    read(j, "width", c.width);
    read(j, "height", c.height);
    read(j, "step_cap", c.step_cap);
    if (j.contains("pacman")) {
        const auto& p = j.at("pacman");
        check_keys(p, {"ghost_count", "ghost_timer", "nearby_threshold", "pellet", "start", "ghost_spawn",
                       "spawn_min_distance", "near_spawn_max_distance", "walls"},
                   "env.pacman");
        read(p, "ghost_count", c.pacman.ghost_count);
        read(p, "ghost_timer", c.pacman.ghost_timer);
        read(p, "nearby_threshold", c.pacman.nearby_threshold);
        read_cell(p, "pellet", c.pacman.pellet);
        read_cell(p, "start", c.pacman.start);
        read(p, "ghost_spawn", c.pacman.ghost_spawn);
        read(p, "spawn_min_distance", c.pacman.spawn_min_distance);
        read(p, "near_spawn_max_distance", c.pacman.near_spawn_max_distance);
        if (p.contains("walls"))
            for (const auto& w : p.at("walls")) {
                const auto v = w.get<std::vector<int>>();
                require(v.size() == 2, "walls entries must be [row, col]");
                c.pacman.walls.push_back({v[0], v[1]});
            }
    }
    if (j.contains("gridpush")) {
        const auto& g = j.at("gridpush");
        check_keys(g, {"l1", "l2", "block", "ring", "agent", "colors", "arrival_bonus", "completion_bonus"},
                   "env.gridpush");
        read_cell(g, "l1", c.grid_push.l1);
        read_cell(g, "l2", c.grid_push.l2);
        read_cell(g, "block", c.grid_push.block);
        read_cell(g, "ring", c.grid_push.ring);
        read_cell(g, "agent", c.grid_push.agent);
        read(g, "colors", c.grid_push.colors);
        read(g, "arrival_bonus", c.grid_push.arrival_bonus);
        read(g, "completion_bonus", c.grid_push.completion_bonus);
    }
    return c;
}

inline SoftQConfig parse_agent(const json& j) {
    check_keys(j, {"temperature", "discount", "target_sync_interval", "margin", "td_weight", "margin_weight",
                   "l2_weight", "pretrain_steps", "batch_size", "demo_fraction", "hidden", "hidden_activation",
                   "learning_rate", "beta1", "beta2", "epsilon", "ntr_reward", "shaping_discount"},
               "agent");
    SoftQConfig c;
    read(j, "temperature", c.temperature);
    read(j, "discount", c.discount);
    read(j, "target_sync_interval", c.target_sync_interval);
    read(j, "margin", c.margin);
    read(j, "td_weight", c.td_weight);
    read(j, "margin_weight", c.margin_weight);
    read(j, "l2_weight", c.l2_weight);
    read(j, "pretrain_steps", c.pretrain_steps);
    read(j, "batch_size", c.batch_size);
    read(j, "demo_fraction", c.demo_fraction);
    read(j, "shaping_discount", c.shaping_discount);
    read(j, "hidden", c.hidden);
    read_activation(j, "hidden_activation", c.hidden_activation);
    read_adam(j, c.adam);
    if (j.contains("ntr_reward")) {
        const auto s = j.at("ntr_reward").get<std::string>();
        require(s == "shaping_difference" || s == "raw_potential",
                "agent.ntr_reward must be shaping_difference or raw_potential");
        c.ntr_reward = s == "raw_potential" ? NtrReward::raw_potential : NtrReward::shaping_difference;
    }
    return c;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    using detail::read;
    detail::check_keys(j,
                       {"env", "agent", "se", "discriminator", "mode", "variant", "episodes", "seeds",
                        "initial_random_trajectories", "eval_window", "greedy_eval_interval",
                        "greedy_eval_episodes", "update_every", "steps_per_env_step", "buffers", "demos",
                        "output_dir"},
                       "config");
    ExperimentConfig c;
    try {
        if (j.contains("env")) c.env = detail::parse_env(j.at("env"));
        if (j.contains("agent")) c.agent = detail::parse_agent(j.at("agent"));
        if (j.contains("se")) {
            const auto& s = j.at("se");
            detail::check_keys(s, {"hidden", "hidden_activation", "learning_rate", "beta1", "beta2", "epsilon",
                                   "batch_size", "zero_init", "frozen"},
                               "se");
            read(s, "hidden", c.se.hidden);
            detail::read_activation(s, "hidden_activation", c.se.hidden_activation);
            detail::read_adam(s, c.se.adam);
            read(s, "batch_size", c.se.batch_size);
            read(s, "zero_init", c.se.zero_init);
            read(s, "frozen", c.se.frozen);
        }
        if (j.contains("discriminator")) {
            const auto& d = j.at("discriminator");
            detail::check_keys(d, {"hidden", "hidden_activation", "learning_rate", "beta1", "beta2", "epsilon",
                                   "batch_size"},
                               "discriminator");
            read(d, "hidden", c.discriminator.hidden);
            detail::read_activation(d, "hidden_activation", c.discriminator.hidden_activation);
            detail::read_adam(d, c.discriminator.adam);
            read(d, "batch_size", c.discriminator.batch_size);
        }
        read(j, "mode", c.mode);
        read(j, "variant", c.variant);
        read(j, "episodes", c.episodes);
        read(j, "seeds", c.seeds);
        read(j, "initial_random_trajectories", c.initial_random_trajectories);
        read(j, "eval_window", c.eval_window);
        read(j, "greedy_eval_interval", c.greedy_eval_interval);
        read(j, "greedy_eval_episodes", c.greedy_eval_episodes);
        read(j, "update_every", c.update_every);
        read(j, "steps_per_env_step", c.steps_per_env_step);
        if (j.contains("buffers")) {
            const auto& b = j.at("buffers");
            detail::check_keys(b, {"replay", "good", "bad"}, "buffers");
            read(b, "replay", c.buffers.replay);
            read(b, "good", c.buffers.good);
            read(b, "bad", c.buffers.bad);
        }
        read(j, "demos", c.demos);
        read(j, "output_dir", c.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    return parse_experiment_config(j);
}

}  // namespace serlfd
