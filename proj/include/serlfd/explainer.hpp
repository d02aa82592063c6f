#pragma once

// Self-explanation network and the success/failure discriminator built on
// top of it.
//
//   u = SE(s)                           utilities, tanh-bounded
//   h(s, u) = sum_i u_i * p_i(s)        potential
//   r_hat = r + h(s', u') - h(s, u)     shaped reward, h(s') = 0 when done
//   D = exp(r_hat) / (exp(r_hat) + q(a|s))

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "serlfd/approximator.hpp"
#include "serlfd/buffers.hpp"
#include "serlfd/envs/environment.hpp"

namespace serlfd {

struct UtilityVector {
    std::vector<double> values;
    std::size_t size() const { return values.size(); }
};

struct SENet {
    MlpSpec spec;
    MlpParams params;

    static SENet create(std::size_t state_dim, std::size_t predicate_count,
                        const std::vector<std::size_t>& hidden, Activation hidden_activation,
                        std::mt19937_64& rng) {
        SENet se;
        se.spec.layer_sizes.push_back(state_dim);
        se.spec.layer_sizes.insert(se.spec.layer_sizes.end(), hidden.begin(), hidden.end());
        se.spec.layer_sizes.push_back(predicate_count);
        se.spec.hidden_activation = hidden_activation;
        se.spec.output_activation = Activation::tanh;
        se.params = init_params(se.spec, rng);
        return se;
    }

    std::size_t state_dim() const { return spec.input_dim(); }
    std::size_t predicate_count() const { return spec.output_dim(); }
};

inline UtilityVector utilities(const SENet& se, std::span<const double> state) {
    require(state.size() == se.state_dim(), "utilities: state dimension mismatch");
    return {forward(se.spec, se.params, state)};
}

inline double potential(std::span<const double> u, const PredicateVector& p) {
    require(u.size() == p.size(), "potential: utility/predicate length mismatch");
    double h = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) h += u[i] * p[i];
    return h;
}

inline double potential(const UtilityVector& u, const PredicateVector& p) { return potential(u.values, p); }

struct ShapedRewardInputs {
    std::span<const double> state;
    const UtilityVector& u;
    const PredicateVector& p;
    ActionId action = 0;
    std::span<const double> next_state;
    const UtilityVector& next_u;
    const PredicateVector& next_p;
    double reward = 0.0;
    bool done = false;
};

/// The shaping term lambda * h(s', u') - h(s, u) with the terminal potential
/// fixed to zero.
inline double shaping_term(const UtilityVector& u, const PredicateVector& p, const UtilityVector& next_u,
                           const PredicateVector& next_p, bool done, double lambda = 1.0) {
    const double h_next = done ? 0.0 : potential(next_u, next_p);
    return lambda * h_next - potential(u, p);
}

inline double shaped_reward(const ShapedRewardInputs& in) {
    return in.reward + shaping_term(in.u, in.p, in.next_u, in.next_p, in.done);
}

inline double discriminator_prob(double r_hat, double q) {
    require(q > 0.0, "discriminator_prob: q(a|s) must be positive");
    const double z = r_hat - std::log(q);
    return 1.0 / (1.0 + std::exp(-z));
}

/// log q(a|s) of an experience's action under a frozen policy snapshot.
/// The second argument carries SE(s) from the network being trained, for
/// policies whose input includes utilities. Log space keeps near-greedy
/// policies from underflowing to q = 0.
using PolicyLogDensity = std::function<double(const Experience&, std::span<const double>)>;

namespace detail {

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace detail

struct SeLossResult {
    double loss = 0.0;
    Gradients grads;
};

/// Binary cross-entropy of the discriminator: mean -log D over the good
/// batch plus mean -log(1 - D) over the bad batch. Gradients flow through
/// u at both ends of every transition; q is a constant.
inline SeLossResult se_loss_and_gradient(const Batch& good, const Batch& bad, const SENet& se,
                                         const PolicyLogDensity& policy, bool want_gradient = true) {
    require(!good.empty() && !bad.empty(), "se_loss: good and bad batches must be non-empty");
    SeLossResult result;
    if (want_gradient) result.grads = Gradients::zeros_like(se.params);
    std::vector<double> upstream(se.predicate_count());

    auto accumulate = [&](const Batch& batch, bool is_good) {
        const double weight = 1.0 / static_cast<double>(batch.size());
        for (const auto& item : batch) {
            const Experience& e = *item;
            require(e.predicates.size() == se.predicate_count(), "se_loss: predicate count mismatch");
            const auto trace = trace_forward(se.spec, se.params, e.state);
            const double h = potential(trace.output(), e.predicates);
            double h_next = 0.0;
            ForwardTrace next_trace;
            if (!e.done) {
                next_trace = trace_forward(se.spec, se.params, e.next_state);
                h_next = potential(next_trace.output(), e.next_predicates);
            }
            const double log_q = policy(e, trace.output());
            require(std::isfinite(log_q), "se_loss: policy log-density must be finite");
            const double z = e.reward + h_next - h - log_q;
            // good: -log D = softplus(-z); bad: -log(1 - D) = softplus(z)
            result.loss += weight * (is_good ? detail::softplus(-z) : detail::softplus(z));
            if (!want_gradient) continue;
            const double dz = weight * (is_good ? -detail::sigmoid(-z) : detail::sigmoid(z));
            for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] = -dz * e.predicates[i];
            accumulate_backward(se.spec, se.params, trace, upstream, result.grads);
            if (!e.done) {
                for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] = dz * e.next_predicates[i];
                accumulate_backward(se.spec, se.params, next_trace, upstream, result.grads);
            }
        }
    };
    accumulate(good, true);
    accumulate(bad, false);
    return result;
}

inline double se_loss(const Batch& good, const Batch& bad, const SENet& se, const PolicyLogDensity& policy) {
    return se_loss_and_gradient(good, bad, se, policy, false).loss;
}

/// One Adam step on L_SE. Returns the loss evaluated before the update.
inline double se_train_step(SENet& se, AdamState& optimizer, const Batch& good, const Batch& bad,
                            const PolicyLogDensity& policy) {
    auto r = se_loss_and_gradient(good, bad, se, policy);
    if (!std::isfinite(r.loss)) throw Error("se_train_step: non-finite loss, step rejected");
    adam_step(optimizer, se.params, r.grads);
    return r.loss;
}

}  // namespace serlfd
