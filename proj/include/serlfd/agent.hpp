#pragma once

// Soft Q-learning from demonstrations (SQLfD) with the self-explanation
// augmentation modes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "serlfd/approximator.hpp"
#include "serlfd/buffers.hpp"
#include "serlfd/explainer.hpp"

namespace serlfd {

enum class AugmentationMode { none, se_full, se_nu, se_nrs, se_ntr };

inline std::string to_string(AugmentationMode m) {
    switch (m) {
        case AugmentationMode::none: return "none";
        case AugmentationMode::se_full: return "se_full";
        case AugmentationMode::se_nu: return "se_nu";
        case AugmentationMode::se_nrs: return "se_nrs";
        case AugmentationMode::se_ntr: return "se_ntr";
    }
    return "?";
}

inline AugmentationMode mode_from_string(const std::string& s) {
    for (auto m : {AugmentationMode::none, AugmentationMode::se_full, AugmentationMode::se_nu,
                   AugmentationMode::se_nrs, AugmentationMode::se_ntr})
        if (to_string(m) == s) return m;
    throw ContractViolation("unknown augmentation mode '" + s + "'");
}

inline bool uses_explainer(AugmentationMode m) { return m != AugmentationMode::none; }
inline bool input_has_predicates(AugmentationMode m) { return m != AugmentationMode::none; }
inline bool input_has_utilities(AugmentationMode m) {
    return m == AugmentationMode::se_full || m == AugmentationMode::se_nrs || m == AugmentationMode::se_ntr;
}

inline std::size_t effective_state_dim(AugmentationMode m, std::size_t state_dim, std::size_t k) {
    return state_dim + (input_has_predicates(m) ? k : 0) + (input_has_utilities(m) ? k : 0);
}

/// <s>, <s,p> or <s,p,u> depending on the mode.
inline std::vector<double> effective_state(AugmentationMode m, std::span<const double> state,
                                           const PredicateVector& p, std::span<const double> u) {
    std::vector<double> out(state.begin(), state.end());
    if (input_has_predicates(m)) out.insert(out.end(), p.values.begin(), p.values.end());
    if (input_has_utilities(m)) {
        require(u.size() == p.size(), "effective_state: utilities missing or wrong length");
        out.insert(out.end(), u.begin(), u.end());
    }
    return out;
}

/// How se_ntr builds its reward once the task reward is removed.
enum class NtrReward { shaping_difference, raw_potential };

struct SoftQConfig {
    double temperature = 0.1;
    double discount = 0.99;
    int target_sync_interval = 500;
    double margin = 0.8;
    double td_weight = 1.0;
    double margin_weight = 1.0;
    double l2_weight = 1e-5;
    int pretrain_steps = 1000;
    std::size_t batch_size = 32;
    double demo_fraction = 0.25;
    std::vector<std::size_t> hidden{64, 64};
    Activation hidden_activation = Activation::relu;
    AdamConfig adam;
    NtrReward ntr_reward = NtrReward::shaping_difference;
    /// lambda in lambda * h(s') - h(s) for the agent's reward channel.
    double shaping_discount = 1.0;

    void validate() const {
        require(temperature > 0.0, "temperature must be positive");
        require(discount > 0.0 && discount < 1.0, "discount must lie in (0,1)");
        require(target_sync_interval >= 1, "target sync interval must be >= 1");
        require(margin > 0.0, "margin must be positive");
        require(td_weight >= 0.0 && margin_weight >= 0.0 && l2_weight >= 0.0, "loss weights must be >= 0");
        require(pretrain_steps >= 0, "pretrain steps must be >= 0");
        require(batch_size >= 1, "batch size must be >= 1");
        require(demo_fraction >= 0.0 && demo_fraction <= 1.0, "demo_fraction must lie in [0,1]");
        require(shaping_discount >= 0.0 && shaping_discount <= 1.0, "shaping_discount must lie in [0,1]");
    }
};

struct QNet {
    MlpSpec spec;
    MlpParams params;

    static QNet create(std::size_t input_dim, std::size_t action_count, const std::vector<std::size_t>& hidden,
                       Activation hidden_activation, std::mt19937_64& rng) {
        QNet q;
        q.spec.layer_sizes.push_back(input_dim);
        q.spec.layer_sizes.insert(q.spec.layer_sizes.end(), hidden.begin(), hidden.end());
        q.spec.layer_sizes.push_back(action_count);
        q.spec.hidden_activation = hidden_activation;
        q.spec.output_activation = Activation::linear;
        q.params = init_params(q.spec, rng);
        return q;
    }

    std::vector<double> values(std::span<const double> state_eff) const {
        return forward(spec, params, state_eff);
    }
    std::size_t action_count() const { return spec.output_dim(); }
};

/// alpha * log sum_a exp(q_a / alpha)
inline double soft_value(std::span<const double> q, double alpha) {
    const double top = *std::max_element(q.begin(), q.end());
    double sum = 0.0;
    for (double x : q) sum += std::exp((x - top) / alpha);
    return top + alpha * std::log(sum);
}

/// Entries are floored at the smallest normal double so that every action
/// keeps positive mass at low temperature.
inline std::vector<double> softmax_policy(std::span<const double> q, double alpha) {
    const double top = *std::max_element(q.begin(), q.end());
    std::vector<double> p(q.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) sum += (p[i] = std::exp((q[i] - top) / alpha));
    for (auto& x : p) x = std::max(x / sum, std::numeric_limits<double>::min());
    return p;
}

/// log softmax(q / alpha)[a], exact for any temperature.
inline double log_policy_prob(std::span<const double> q, ActionId a, double alpha) {
    return (q[static_cast<std::size_t>(a)] - soft_value(q, alpha)) / alpha;
}

inline std::vector<double> policy_probs(const QNet& q, std::span<const double> state_eff, double alpha) {
    require(alpha > 0.0, "policy_probs: temperature must be positive");
    return softmax_policy(q.values(state_eff), alpha);
}

inline ActionId argmax_action(std::span<const double> q) {
    return static_cast<ActionId>(std::max_element(q.begin(), q.end()) - q.begin());
}

/// Greedy (lowest index on ties) when eval_mode, otherwise a draw from the
/// soft policy.
template <class Rng>
ActionId act(const QNet& q, std::span<const double> state_eff, Rng& rng, double alpha, bool eval_mode) {
    const auto values = q.values(state_eff);
    if (eval_mode) return argmax_action(values);
    const auto probs = softmax_policy(values, alpha);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    for (std::size_t a = 0; a + 1 < probs.size(); ++a) {
        if (x < probs[a]) return static_cast<ActionId>(a);
        x -= probs[a];
    }
    return static_cast<ActionId>(probs.size() - 1);
}

/// A replay record rewritten for the Q-network: effective states and the
/// mode's reward.
struct Transition {
    std::vector<double> state;
    ActionId action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
    bool is_demo = false;
};

using RewardOverride = std::function<double(const Experience&)>;

/// Builds effective states and rewards per mode. se may be null only for
/// mode none. reward_override replaces the reward channel entirely.
inline std::vector<Transition> prepare_batch(const Batch& batch, AugmentationMode mode, const SENet* se,
                                             NtrReward ntr = NtrReward::shaping_difference,
                                             const RewardOverride& reward_override = {},
                                             double shaping_discount = 1.0) {
    require(!uses_explainer(mode) || se != nullptr, "prepare_batch: mode needs an SE-Net snapshot");
    std::vector<Transition> out;
    out.reserve(batch.size());
    for (const auto& item : batch) {
        const Experience& e = *item;
        Transition t;
        t.action = e.action;
        t.done = e.done;
        t.is_demo = item.is_demo;
        if (!uses_explainer(mode)) {
            t.state = e.state;
            t.next_state = e.next_state;
            t.reward = reward_override ? reward_override(e) : e.reward;
            out.push_back(std::move(t));
            continue;
        }
        const UtilityVector u = utilities(*se, e.state);
        const UtilityVector next_u = utilities(*se, e.next_state);
        t.state = effective_state(mode, e.state, e.predicates, u.values);
        t.next_state = effective_state(mode, e.next_state, e.next_predicates, next_u.values);
        const double shaping = shaping_term(u, e.predicates, next_u, e.next_predicates, e.done, shaping_discount);
        switch (mode) {
            case AugmentationMode::se_full:
            case AugmentationMode::se_nu: t.reward = e.reward + shaping; break;
            case AugmentationMode::se_nrs: t.reward = e.reward; break;
            case AugmentationMode::se_ntr:
                t.reward = ntr == NtrReward::shaping_difference
                               ? shaping
                               : (e.done ? 0.0 : shaping_discount * potential(next_u, e.next_predicates));
                break;
            default: break;
        }
        if (reward_override) t.reward = reward_override(e);
        out.push_back(std::move(t));
    }
    return out;
}

/// reward + gamma * (1 - done) * V_soft(s') under the target network.
inline std::vector<double> soft_td_target(std::span<const Transition> batch, const QNet& target, double gamma,
                                          double alpha) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (const auto& t : batch) {
        double v = 0.0;
        if (!t.done) v = soft_value(target.values(t.next_state), alpha);
        y.push_back(t.reward + gamma * v);
    }
    return y;
}

/// max_a [Q(s,a) + m * 1(a != a_E)] - Q(s,a_E) for one state.
inline double large_margin(std::span<const double> q, ActionId expert, double margin, ActionId* worst = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    ActionId arg = 0;
    for (std::size_t a = 0; a < q.size(); ++a) {
        const double v = q[a] + (static_cast<ActionId>(a) == expert ? 0.0 : margin);
        if (v > best) {
            best = v;
            arg = static_cast<ActionId>(a);
        }
    }
    if (worst) *worst = arg;
    return best - q[static_cast<std::size_t>(expert)];
}

/// Mean large-margin loss over a batch of demonstration transitions.
inline double margin_loss(const QNet& q, std::span<const Transition> demos, double margin) {
    require(!demos.empty(), "margin_loss: demo batch is empty");
    double sum = 0.0;
    for (const auto& t : demos) sum += large_margin(q.values(t.state), t.action, margin);
    return sum / static_cast<double>(demos.size());
}

struct AgentLoss {
    double td = 0.0;
    double margin = 0.0;
    double l2 = 0.0;
    double total = 0.0;
    Gradients grads;
};

/// td_weight * mean 0.5 (Q(s,a) - y)^2 + margin_weight * mean margin over
/// the demo records + l2_weight * 0.5 * |theta|^2, with y held fixed.
inline AgentLoss agent_loss(const QNet& online, std::span<const Transition> batch, std::span<const double> targets,
                            const SoftQConfig& config) {
    require(!batch.empty() && batch.size() == targets.size(), "agent_loss: batch/target mismatch");
    AgentLoss out;
    out.grads = Gradients::zeros_like(online.params);
    const std::size_t demo_count =
        static_cast<std::size_t>(std::count_if(batch.begin(), batch.end(), [](const Transition& t) { return t.is_demo; }));
    const double td_scale = config.td_weight / static_cast<double>(batch.size());
    const double margin_scale = demo_count ? config.margin_weight / static_cast<double>(demo_count) : 0.0;
    std::vector<double> upstream(online.action_count());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& t = batch[i];
        const auto trace = trace_forward(online.spec, online.params, t.state);
        const auto& q = trace.output();
        const auto a = static_cast<std::size_t>(t.action);
        std::fill(upstream.begin(), upstream.end(), 0.0);
        const double err = q[a] - targets[i];
        out.td += 0.5 * err * err / static_cast<double>(batch.size());
        upstream[a] += td_scale * err;
        if (t.is_demo && config.margin_weight > 0.0) {
            ActionId worst = 0;
            out.margin += large_margin(q, t.action, config.margin, &worst) / static_cast<double>(demo_count);
            upstream[static_cast<std::size_t>(worst)] += margin_scale;
            upstream[a] -= margin_scale;
        }
        accumulate_backward(online.spec, online.params, trace, upstream, out.grads);
    }
    if (config.l2_weight > 0.0) {
        double sq = 0.0;
        for (std::size_t l = 0; l < online.params.layers.size(); ++l) {
            const auto& p = online.params.layers[l];
            auto& g = out.grads.layers[l];
            for (std::size_t j = 0; j < p.weight.size(); ++j) {
                sq += p.weight[j] * p.weight[j];
                g.weight[j] += config.l2_weight * p.weight[j];
            }
            for (std::size_t j = 0; j < p.bias.size(); ++j) {
                sq += p.bias[j] * p.bias[j];
                g.bias[j] += config.l2_weight * p.bias[j];
            }
        }
        out.l2 = 0.5 * sq;
    }
    out.total = config.td_weight * out.td + config.margin_weight * out.margin + config.l2_weight * out.l2;
    return out;
}

struct SoftQAgent {
    SoftQConfig config;
    AugmentationMode mode = AugmentationMode::none;
    QNet online;
    QNet target;
    AdamState optimizer;
    std::uint64_t updates = 0;

    static SoftQAgent create(const SoftQConfig& config, AugmentationMode mode, std::size_t state_dim,
                             std::size_t predicate_count, std::size_t action_count, std::mt19937_64& rng) {
        config.validate();
        SoftQAgent a;
        a.config = config;
        a.mode = mode;
        a.online = QNet::create(effective_state_dim(mode, state_dim, predicate_count), action_count, config.hidden,
                                config.hidden_activation, rng);
        a.target = a.online;
        a.optimizer = AdamState::for_params(a.online.params, config.adam);
        return a;
    }

    std::size_t input_dim() const { return online.spec.input_dim(); }

    /// Effective input for a raw state under the agent's mode.
    std::vector<double> input_for(std::span<const double> state, const PredicateVector& p,
                                  const SENet* se) const {
        if (!input_has_utilities(mode)) return effective_state(mode, state, p, {});
        require(se != nullptr, "agent input needs an SE-Net snapshot");
        return effective_state(mode, state, p, utilities(*se, state).values);
    }
};

struct TrainStats {
    double td = 0.0;
    double margin = 0.0;
    double l2 = 0.0;
    double total = 0.0;
};

/// One gradient step on already prepared transitions; syncs the target
/// network every target_sync_interval updates.
inline TrainStats agent_update(SoftQAgent& agent, std::span<const Transition> batch) {
    const auto targets = soft_td_target(batch, agent.target, agent.config.discount, agent.config.temperature);
    AgentLoss loss = agent_loss(agent.online, batch, targets, agent.config);
    if (!std::isfinite(loss.total)) throw Error("agent_train_step: non-finite loss, step rejected");
    adam_step(agent.optimizer, agent.online.params, loss.grads);
    ++agent.updates;
    if (agent.updates % static_cast<std::uint64_t>(agent.config.target_sync_interval) == 0)
        agent.target.params = agent.online.params;
    return {loss.td, loss.margin, loss.l2, loss.total};
}

inline TrainStats agent_train_step(SoftQAgent& agent, const Batch& batch, const SENet* se,
                                   const RewardOverride& reward_override = {}) {
    const auto prepared = prepare_batch(batch, agent.mode, se, agent.config.ntr_reward, reward_override,
                                         agent.config.shaping_discount);
    return agent_update(agent, prepared);
}

/// Demonstration-only updates before interaction starts.
template <class Rng>
void pretrain(SoftQAgent& agent, const ReplayBuffer& buffer, const SENet* se, int steps, Rng& rng,
              const RewardOverride& reward_override = {}) {
    require(steps >= 0, "pretrain: steps must be >= 0");
    if (steps == 0) return;
    if (buffer.demo_size() == 0) throw Error("pretrain: no demonstrations in the replay buffer");
    for (int i = 0; i < steps; ++i)
        agent_train_step(agent, buffer.sample_demos(agent.config.batch_size, rng), se, reward_override);
}

/// log q(a|s) under the agent's current online network, for the
/// discriminator.
inline PolicyLogDensity policy_log_density(const SoftQAgent& agent, const SENet* se) {
    return [&agent, se](const Experience& e, std::span<const double> u) {
        std::vector<double> input;
        if (input_has_utilities(agent.mode) && u.empty()) input = agent.input_for(e.state, e.predicates, se);
        else input = effective_state(agent.mode, e.state, e.predicates, u);
        return log_policy_prob(agent.online.values(input), e.action, agent.config.temperature);
    };
}

}  // namespace serlfd
