#pragma once

// The outer training loop: demonstrations and K random trajectories seed
// the buffers, then every episode interleaves explainer and agent updates
// with the collection of one new trajectory. The same loop runs the
// state-action GAN-GCL imitation baseline when mode is sa_gan_gcl.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "serlfd/agent.hpp"
#include "serlfd/buffers.hpp"
#include "serlfd/demos.hpp"
#include "serlfd/envs/make.hpp"
#include "serlfd/explainer.hpp"
#include "serlfd/harness/config.hpp"
#include "serlfd/harness/metrics.hpp"

namespace serlfd {

/// SplitMix64 finaliser; derives independent stream seeds from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream * 0x100000001B3ull + index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t {
    kInitStream = 1,
    kSampleStream,
    kActionStream,
    kTrainEpisodeStream,
    kRandomEpisodeStream,
    kEvalEpisodeStream,
};

/// Reward network of the imitation baseline: r_hat(s, a) = f(s)[a]. The
/// output bias starts at -ln|A| so that D = 0.5 under a uniform policy.
struct StateActionDiscriminator {
    MlpSpec spec;
    MlpParams params;

    static StateActionDiscriminator create(std::size_t state_dim, std::size_t action_count,
                                           const std::vector<std::size_t>& hidden, Activation act,
                                           std::mt19937_64& rng) {
        StateActionDiscriminator d;
        d.spec.layer_sizes.push_back(state_dim);
        d.spec.layer_sizes.insert(d.spec.layer_sizes.end(), hidden.begin(), hidden.end());
        d.spec.layer_sizes.push_back(action_count);
        d.spec.hidden_activation = act;
        d.spec.output_activation = Activation::linear;
        d.params = init_params(d.spec, rng);
        for (auto& b : d.params.layers.back().bias) b = -std::log(static_cast<double>(action_count));
        return d;
    }

    double reward(const Experience& e) const {
        return forward(spec, params, e.state)[static_cast<std::size_t>(e.action)];
    }
};

/// Demonstrations labelled good, agent samples labelled bad.
inline SeLossResult sa_discriminator_loss(const Batch& demos, const Batch& samples,
                                          const StateActionDiscriminator& disc, const PolicyLogDensity& policy,
                                          bool want_gradient = true) {
    require(!demos.empty() && !samples.empty(), "discriminator loss: empty batch");
    SeLossResult result;
    if (want_gradient) result.grads = Gradients::zeros_like(disc.params);
    std::vector<double> upstream(disc.spec.output_dim());
    auto accumulate = [&](const Batch& batch, bool is_good) {
        const double weight = 1.0 / static_cast<double>(batch.size());
        for (const auto& item : batch) {
            const Experience& e = *item;
            const auto trace = trace_forward(disc.spec, disc.params, e.state);
            const auto a = static_cast<std::size_t>(e.action);
            const double z = trace.output()[a] - policy(e, {});
            result.loss += weight * (is_good ? detail::softplus(-z) : detail::softplus(z));
            if (!want_gradient) continue;
            std::fill(upstream.begin(), upstream.end(), 0.0);
            upstream[a] = weight * (is_good ? -detail::sigmoid(-z) : detail::sigmoid(z));
            accumulate_backward(disc.spec, disc.params, trace, upstream, result.grads);
        }
    };
    accumulate(demos, true);
    accumulate(samples, false);
    return result;
}

/// Optional observation points, used by tests.
struct RunHooks {
    std::function<void(int episode, const BufferSet&)> on_episode_end;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<MetricsRow> rows;
    std::string metrics_path;
    /// Explainer (or discriminator) loss on the first update; NaN when none ran.
    double first_discriminator_loss = std::nan("");

    double final_score() const { return rows.empty() ? 0.0 : rows.back().score; }
};

namespace detail {

inline Trajectory strip_rewards(Trajectory t) {
    for (auto& e : t.steps) e.reward = std::numeric_limits<double>::quiet_NaN();
    return t;
}

template <class T>
double mean_or_nan(const std::vector<T>& v) {
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (auto x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Runs one seed of an experiment. Demonstrations are taken from
/// `demonstrations` when given, else loaded from config.demos. Writes the
/// metrics CSV and checkpoints when write_outputs is set.
inline RunResult run_single(const ExperimentConfig& config, std::uint64_t seed,
                            const std::vector<Trajectory>* demonstrations = nullptr, bool write_outputs = true,
                            const RunHooks& hooks = {}) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const bool imitation = config.imitation();
    const AugmentationMode mode = config.augmentation();

    auto env = make_environment(config.env);
    auto eval_env = make_environment(config.env);

    std::vector<Trajectory> demos;
    if (demonstrations) {
        demos = *demonstrations;
        for (std::size_t i = 0; i < demos.size(); ++i)
            if (auto problem = validate_trajectory(demos[i], *env); !problem.empty())
                throw Error("demonstration " + std::to_string(i) + ": " + problem);
    } else {
        if (config.demos.empty()) throw Error("no demonstration file configured");
        demos = load_trajectories(config.demos, *env);
    }
    if (demos.empty()) throw Error("demonstration set is empty");

    std::mt19937_64 init_rng(derive_seed(seed, kInitStream));
    std::mt19937_64 sample_rng(derive_seed(seed, kSampleStream));
    std::mt19937_64 action_rng(derive_seed(seed, kActionStream));

    const std::size_t state_dim = env->state_dim();
    const std::size_t k = env->predicate_count();
    const std::size_t actions = env->action_count();

    SoftQAgent agent = SoftQAgent::create(config.agent, mode, state_dim, k, actions, init_rng);

    std::optional<SENet> se;
    std::optional<AdamState> se_opt;
    if (uses_explainer(mode)) {
        se = SENet::create(state_dim, k, config.se.hidden, config.se.hidden_activation, init_rng);
        if (config.se.zero_init) se->params = MlpParams::zeros(se->spec);
        se_opt = AdamState::for_params(se->params, config.se.adam);
    }
    const SENet* se_ptr = se ? &*se : nullptr;

    std::optional<StateActionDiscriminator> disc;
    std::optional<AdamState> disc_opt;
    RewardOverride reward_override;
    if (imitation) {
        disc = StateActionDiscriminator::create(state_dim, actions, config.discriminator.hidden,
                                                config.discriminator.hidden_activation, init_rng);
        disc_opt = AdamState::for_params(disc->params, config.discriminator.adam);
        reward_override = [&disc](const Experience& e) { return disc->reward(e); };
    }

    // Imitation never sees task rewards: they are replaced by NaN before
    // storage, so any read would poison the loss and abort the update.
    BufferSet buffers(config.buffers);
    auto store = [&](const Trajectory& t, bool is_demo) {
        if (!imitation) {
            buffers.add_trajectory(t, is_demo);
            return;
        }
        const Trajectory stripped = detail::strip_rewards(t);
        const std::uint64_t id = buffers.next_trajectory_id++;
        for (const auto& e : stripped.steps) {
            buffers.rl.add(e, is_demo, id);
            (is_demo ? buffers.good : buffers.bad).add(e, is_demo, id);
        }
    };
    for (const auto& d : demos) store(d, true);

    pretrain(agent, buffers.rl, se_ptr, config.agent.pretrain_steps, sample_rng, reward_override);

    std::uniform_int_distribution<ActionId> random_action(0, static_cast<ActionId>(actions) - 1);
    for (int i = 0; i < config.initial_random_trajectories; ++i) {
        const auto t = rollout(*env, derive_seed(seed, kRandomEpisodeStream, static_cast<std::uint64_t>(i)),
                               [&](const Environment&, const StateVec&) { return random_action(action_rng); });
        store(t, false);
    }

    const PolicyLogDensity log_density = policy_log_density(agent, se_ptr);
    RunResult result;
    result.seed = seed;
    std::deque<bool> window;
    int window_successes = 0;
    std::uint64_t env_steps = 0;

    auto choose = [&](const Environment& e, const StateVec& s, bool greedy) {
        const auto input = agent.input_for(s, e.ground_predicates(s), se_ptr);
        return act(agent.online, input, action_rng, config.agent.temperature, greedy);
    };

    for (int episode = 1; episode <= config.episodes; ++episode) {
        std::vector<double> se_losses, td_losses, margin_losses;
        Trajectory t;
        t.env_name = env->name();
        t.episode_seed = derive_seed(seed, kTrainEpisodeStream, static_cast<std::uint64_t>(episode));
        StateVec s = env->reset(t.episode_seed);
        while (true) {
            if (env_steps % static_cast<std::uint64_t>(config.update_every) == 0) {
                for (int u = 0; u < config.steps_per_env_step; ++u) {
                    if (se && !config.se.frozen && !buffers.good.empty() && !buffers.bad.empty()) {
                        const Batch good = buffers.good.sample(config.se.batch_size, sample_rng);
                        const Batch bad = buffers.bad.sample(config.se.batch_size, sample_rng);
                        se_losses.push_back(se_train_step(*se, *se_opt, good, bad, log_density));
                    }
                    if (disc && !buffers.good.empty() && !buffers.bad.empty()) {
                        const Batch good = buffers.good.sample(config.discriminator.batch_size, sample_rng);
                        const Batch bad = buffers.bad.sample(config.discriminator.batch_size, sample_rng);
                        auto loss = sa_discriminator_loss(good, bad, *disc, log_density);
                        if (!std::isfinite(loss.loss)) throw Error("discriminator: non-finite loss");
                        adam_step(*disc_opt, disc->params, loss.grads);
                        se_losses.push_back(loss.loss);
                    }
                    if (std::isnan(result.first_discriminator_loss) && !se_losses.empty())
                        result.first_discriminator_loss = se_losses.front();
                    const Batch batch =
                        buffers.rl.sample(config.agent.batch_size, sample_rng, config.agent.demo_fraction);
                    const auto stats = agent_train_step(agent, batch, se_ptr, reward_override);
                    td_losses.push_back(stats.td);
                    margin_losses.push_back(stats.margin);
                }
            }
            const ActionId a = choose(*env, s, false);
            StepResult r = env->step(a);
            ++env_steps;
            t.success = t.success || r.success;
            t.steps.push_back(make_experience(*env, s, a, r));
            if (r.done) break;
            s = std::move(r.next_state);
        }
        const double episode_return = t.total_reward();
        store(t, false);

        window.push_back(t.success);
        window_successes += t.success ? 1 : 0;
        if (static_cast<int>(window.size()) > config.eval_window) {
            window_successes -= window.front() ? 1 : 0;
            window.pop_front();
        }

        MetricsRow row;
        row.episode = episode;
        row.episode_return = episode_return;
        row.length = t.steps.size();
        row.success = t.success;
        row.score = static_cast<double>(window_successes) / static_cast<double>(window.size());
        row.se_loss = detail::mean_or_nan(se_losses);
        row.td_loss = detail::mean_or_nan(td_losses);
        row.margin_loss = detail::mean_or_nan(margin_losses);
        row.rl_size = buffers.rl.size();
        row.rl_demo_size = buffers.rl.demo_size();
        row.good_size = buffers.good.size();
        row.bad_size = buffers.bad.size();
        if (config.greedy_eval_interval > 0 && config.greedy_eval_episodes > 0 &&
            episode % config.greedy_eval_interval == 0) {
            int wins = 0;
            for (int i = 0; i < config.greedy_eval_episodes; ++i) {
                const auto seed_i = derive_seed(seed, kEvalEpisodeStream,
                                                static_cast<std::uint64_t>(episode) * 1000 + static_cast<std::uint64_t>(i));
                const auto et = rollout(*eval_env, seed_i, [&](const Environment& e, const StateVec& st) {
                    return choose(e, st, true);
                });
                wins += et.success ? 1 : 0;
            }
            row.greedy_score = static_cast<double>(wins) / config.greedy_eval_episodes;
        }
        row.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.rows.push_back(row);
        if (hooks.on_episode_end) hooks.on_episode_end(episode, buffers);
    }

    if (write_outputs) {
        std::filesystem::create_directories(config.output_dir);
        const std::string stem =
            (std::filesystem::path(config.output_dir) / (config.label() + "_seed" + std::to_string(seed))).string();
        result.metrics_path = stem + ".csv";
        write_metrics(result.metrics_path, result.rows);
        save_checkpoint(stem + ".qnet", agent.online.spec, agent.online.params);
        if (se) save_checkpoint(stem + ".senet", se->spec, se->params);
        if (disc) save_checkpoint(stem + ".disc", disc->spec, disc->params);
    }
    return result;
}

/// One run per configured seed, optionally on parallel threads. Each run
/// owns all of its state.
inline std::vector<RunResult> run_experiment(const ExperimentConfig& config, bool parallel_seeds = false,
                                             const std::vector<Trajectory>* demonstrations = nullptr,
                                             bool write_outputs = true) {
    config.validate();
    std::vector<RunResult> results(config.seeds.size());
    if (!parallel_seeds || config.seeds.size() == 1) {
        for (std::size_t i = 0; i < config.seeds.size(); ++i)
            results[i] = run_single(config, config.seeds[i], demonstrations, write_outputs);
        return results;
    }
    std::vector<std::exception_ptr> errors(config.seeds.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < config.seeds.size(); ++i)
        threads.emplace_back([&, i] {
            try {
                results[i] = run_single(config, config.seeds[i], demonstrations, write_outputs);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

/// The imitation baseline through the same loop and metrics schema.
inline std::vector<RunResult> run_sa_gan_gcl(ExperimentConfig config, bool parallel_seeds = false,
                                             const std::vector<Trajectory>* demonstrations = nullptr,
                                             bool write_outputs = true) {
    config.mode = "sa_gan_gcl";
    return run_experiment(config, parallel_seeds, demonstrations, write_outputs);
}

}  // namespace serlfd
