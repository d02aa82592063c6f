#pragma once

// Feed-forward function approximator with exact reverse-mode gradients and
// an Adam optimizer. Shared by the self-explanation network, the soft
// Q-network and the imitation baseline's discriminator.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "serlfd/error.hpp"

namespace serlfd {

enum class Activation { relu, tanh, linear };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::linear: return "linear";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "linear") return Activation::linear;
    throw ContractViolation("unknown activation '" + name + "'");
}

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::linear;

    void validate() const {
        require(layer_sizes.size() >= 2, "MlpSpec needs at least an input and an output size");
        for (auto n : layer_sizes) require(n >= 1, "MlpSpec layer sizes must be >= 1");
        require(hidden_activation != Activation::linear, "hidden activation must be relu or tanh");
        require(output_activation != Activation::relu, "output activation must be linear or tanh");
    }
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return layer_sizes.size() - 1; }
    Activation activation_of(std::size_t layer) const {
        return layer + 1 == layer_count() ? output_activation : hidden_activation;
    }
    bool operator==(const MlpSpec&) const = default;
};

/// One affine layer; weight is out x in, row-major.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    double& w(std::size_t row, std::size_t col) { return weight[row * in + col]; }
    double w(std::size_t row, std::size_t col) const { return weight[row * in + col]; }
    bool operator==(const DenseLayer&) const = default;
};

namespace detail {

inline std::vector<DenseLayer> zero_layers(const MlpSpec& spec) {
    std::vector<DenseLayer> layers;
    layers.reserve(spec.layer_count());
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        DenseLayer d;
        d.in = spec.layer_sizes[l];
        d.out = spec.layer_sizes[l + 1];
        d.weight.assign(d.in * d.out, 0.0);
        d.bias.assign(d.out, 0.0);
        layers.push_back(std::move(d));
    }
    return layers;
}

template <class F>
void for_each_entry(std::vector<DenseLayer>& layers, F&& f) {
    for (auto& layer : layers) {
        for (auto& x : layer.weight) f(x);
        for (auto& x : layer.bias) f(x);
    }
}

template <class F>
void for_each_entry(const std::vector<DenseLayer>& layers, F&& f) {
    for (const auto& layer : layers) {
        for (auto x : layer.weight) f(x);
        for (auto x : layer.bias) f(x);
    }
}

inline bool same_shape(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].in != b[i].in || a[i].out != b[i].out) return false;
    return true;
}

}  // namespace detail

struct MlpParams {
    std::vector<DenseLayer> layers;

    static MlpParams zeros(const MlpSpec& spec) { return {detail::zero_layers(spec)}; }

    bool matches(const MlpSpec& spec) const {
        if (layers.size() != spec.layer_count()) return false;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& d = layers[l];
            if (d.in != spec.layer_sizes[l] || d.out != spec.layer_sizes[l + 1]) return false;
            if (d.weight.size() != d.in * d.out || d.bias.size() != d.out) return false;
        }
        return true;
    }
    bool all_finite() const {
        bool ok = true;
        detail::for_each_entry(layers, [&](double x) { ok = ok && std::isfinite(x); });
        return ok;
    }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& d : layers) n += d.weight.size() + d.bias.size();
        return n;
    }
    bool operator==(const MlpParams&) const = default;
};

/// Partial derivatives of a scalar loss; shape-identical to MlpParams.
struct Gradients {
    std::vector<DenseLayer> layers;

    static Gradients zeros(const MlpSpec& spec) { return {detail::zero_layers(spec)}; }
    static Gradients zeros_like(const MlpParams& params) {
        Gradients g{params.layers};
        detail::for_each_entry(g.layers, [](double& x) { x = 0.0; });
        return g;
    }

    void scale(double factor) {
        detail::for_each_entry(layers, [&](double& x) { x *= factor; });
    }
    void add(const Gradients& other, double factor = 1.0) {
        require(detail::same_shape(layers, other.layers), "gradient shape mismatch");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            for (std::size_t i = 0; i < layers[l].weight.size(); ++i)
                layers[l].weight[i] += factor * other.layers[l].weight[i];
            for (std::size_t i = 0; i < layers[l].bias.size(); ++i)
                layers[l].bias[i] += factor * other.layers[l].bias[i];
        }
    }
    bool all_finite() const {
        bool ok = true;
        detail::for_each_entry(layers, [&](double x) { ok = ok && std::isfinite(x); });
        return ok;
    }
};

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::linear: return x;
    }
    return x;
}

/// Derivative expressed through the pre-activation x and output y.
/// ReLU uses subgradient 0 at x == 0.
inline double activation_slope(Activation a, double x, double y) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - y * y;
        case Activation::linear: return 1.0;
    }
    return 1.0;
}

/// Per-layer values of one forward pass, kept for backpropagation.
/// post[0] is the input; pre[l] / post[l + 1] belong to layer l.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;

    const std::vector<double>& output() const { return post.back(); }
};

inline void check_params(const MlpSpec& spec, const MlpParams& params) {
    require(params.matches(spec), "parameters do not match the network spec");
}

inline ForwardTrace trace_forward(const MlpSpec& spec, const MlpParams& params,
                                  std::span<const double> input) {
    require(input.size() == spec.input_dim(),
            "forward: input length " + std::to_string(input.size()) + " != " +
                std::to_string(spec.input_dim()));
    check_params(spec, params);
    ForwardTrace t;
    t.pre.resize(spec.layer_count());
    t.post.resize(spec.layer_count() + 1);
    t.post[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const auto& layer = params.layers[l];
        const auto& x = t.post[l];
        auto& z = t.pre[l];
        auto& y = t.post[l + 1];
        z.resize(layer.out);
        y.resize(layer.out);
        const Activation act = spec.activation_of(l);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* row = layer.weight.data() + o * layer.in;
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * x[i];
            z[o] = acc;
            y[o] = activate(act, acc);
        }
    }
    return t;
}

inline std::vector<double> forward(const MlpSpec& spec, const MlpParams& params,
                                   std::span<const double> input) {
    return trace_forward(spec, params, input).post.back();
}

/// Adds d(output . upstream)/d(params) into grads; writes the input gradient
/// when input_grad is non-null.
inline void accumulate_backward(const MlpSpec& spec, const MlpParams& params,
                                const ForwardTrace& trace, std::span<const double> upstream,
                                Gradients& grads, std::vector<double>* input_grad = nullptr) {
    require(upstream.size() == spec.output_dim(), "backward: upstream length != output dim");
    require(detail::same_shape(grads.layers, params.layers), "backward: gradient shape mismatch");
    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> next;
    for (std::size_t l = spec.layer_count(); l-- > 0;) {
        const auto& layer = params.layers[l];
        auto& g = grads.layers[l];
        const auto& x = trace.post[l];
        const Activation act = spec.activation_of(l);
        for (std::size_t o = 0; o < layer.out; ++o)
            delta[o] *= activation_slope(act, trace.pre[l][o], trace.post[l + 1][o]);
        const bool need_next = l > 0 || input_grad != nullptr;
        if (need_next) next.assign(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            g.bias[o] += d;
            double* grow = g.weight.data() + o * layer.in;
            const double* wrow = layer.weight.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) grow[i] += d * x[i];
            if (need_next)
                for (std::size_t i = 0; i < layer.in; ++i) next[i] += d * wrow[i];
        }
        if (need_next) delta.swap(next);
    }
    if (input_grad != nullptr) *input_grad = std::move(delta);
}

struct BackwardResult {
    Gradients grads;
    std::vector<double> input_grad;
};

inline BackwardResult backward(const MlpSpec& spec, const MlpParams& params,
                               std::span<const double> input, std::span<const double> upstream) {
    require(upstream.size() == spec.output_dim(), "backward: upstream length != output dim");
    auto trace = trace_forward(spec, params, input);
    BackwardResult r{Gradients::zeros_like(params), {}};
    accumulate_backward(spec, params, trace, upstream, r.grads, &r.input_grad);
    return r;
}

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
inline MlpParams init_params(const MlpSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    MlpParams p = MlpParams::zeros(spec);
    for (auto& layer : p.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& w : layer.weight) w = u(rng);
        for (auto& b : layer.bias) b = u(rng);
    }
    return p;
}

struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Gradients first_moment;
    Gradients second_moment;
    std::uint64_t step = 0;
    AdamConfig config;

    static AdamState for_params(const MlpParams& params, AdamConfig config = {}) {
        require(config.learning_rate > 0.0, "Adam learning rate must be positive");
        require(config.beta1 > 0.0 && config.beta1 < 1.0, "beta1 must lie in (0,1)");
        require(config.beta2 > 0.0 && config.beta2 < 1.0, "beta2 must lie in (0,1)");
        require(config.epsilon > 0.0, "epsilon must be positive");
        return {Gradients::zeros_like(params), Gradients::zeros_like(params), 0, config};
    }
};

/// One bias-corrected Adam update, in place. Rejects non-finite gradients
/// before touching any state.
inline void adam_step(AdamState& state, MlpParams& params, const Gradients& grads) {
    require(detail::same_shape(params.layers, grads.layers), "adam_step: gradient shape mismatch");
    require(detail::same_shape(params.layers, state.first_moment.layers),
            "adam_step: optimizer state shape mismatch");
    if (!grads.all_finite()) throw Error("adam_step: non-finite gradient entry, update rejected");

    const auto& c = state.config;
    const std::uint64_t t = state.step + 1;
    const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    auto update = [&](std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].weight, state.first_moment.layers[l].weight,
               state.second_moment.layers[l].weight, grads.layers[l].weight);
        update(params.layers[l].bias, state.first_moment.layers[l].bias,
               state.second_moment.layers[l].bias, grads.layers[l].bias);
    }
    state.step = t;
}

// ---------------------------------------------------------------------------
// Checkpoints: line-oriented text, hex-float entries so a save/load/save cycle
// reproduces the file byte for byte.
//
//   serlfd-mlp 1
//   layers <n0> <n1> ... <nL>
//   activations <hidden> <output>
//   layer <l> <out> <in>
//   <out lines of in weights>
//   bias <out entries>
//   ...

inline constexpr const char* kCheckpointMagic = "serlfd-mlp";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline std::string hexfloat(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", x);
    return buf;
}

inline double parse_double(const std::string& token) {
    char* end = nullptr;
    const double x = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw Error("checkpoint: bad number '" + token + "'");
    return x;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const MlpSpec& spec, const MlpParams& params) {
    check_params(spec, params);
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "layers";
    for (auto n : spec.layer_sizes) out << ' ' << n;
    out << '\n';
    out << "activations " << to_string(spec.hidden_activation) << ' '
        << to_string(spec.output_activation) << '\n';
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& d = params.layers[l];
        out << "layer " << l << ' ' << d.out << ' ' << d.in << '\n';
        for (std::size_t o = 0; o < d.out; ++o) {
            for (std::size_t i = 0; i < d.in; ++i) out << (i ? " " : "") << detail::hexfloat(d.w(o, i));
            out << '\n';
        }
        out << "bias";
        for (auto b : d.bias) out << ' ' << detail::hexfloat(b);
        out << '\n';
    }
}

struct Checkpoint {
    MlpSpec spec;
    MlpParams params;
};

inline Checkpoint load_checkpoint(std::istream& in) {
    auto next_line = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line)) throw Error(std::string("checkpoint: missing ") + what);
        return line;
    };
    auto tokens_of = [](const std::string& line) {
        std::istringstream ss(line);
        std::vector<std::string> t;
        for (std::string s; ss >> s;) t.push_back(s);
        return t;
    };
    auto header = tokens_of(next_line("header"));
    if (header.size() != 2 || header[0] != kCheckpointMagic)
        throw Error("checkpoint: not a serlfd-mlp file");
    if (header[1] != std::to_string(kCheckpointVersion))
        throw Error("checkpoint: unsupported version " + header[1]);

    Checkpoint ck;
    auto sizes = tokens_of(next_line("layers"));
    if (sizes.empty() || sizes[0] != "layers") throw Error("checkpoint: expected 'layers'");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        ck.spec.layer_sizes.push_back(static_cast<std::size_t>(std::stoull(sizes[i])));
    auto acts = tokens_of(next_line("activations"));
    if (acts.size() != 3 || acts[0] != "activations") throw Error("checkpoint: expected 'activations'");
    try {
        ck.spec.hidden_activation = activation_from_string(acts[1]);
        ck.spec.output_activation = activation_from_string(acts[2]);
        ck.spec.validate();
    } catch (const ContractViolation& e) {
        throw Error(std::string("checkpoint: ") + e.what());
    }
    ck.params = MlpParams::zeros(ck.spec);
    for (std::size_t l = 0; l < ck.params.layers.size(); ++l) {
        auto& d = ck.params.layers[l];
        auto head = tokens_of(next_line("layer header"));
        if (head.size() != 4 || head[0] != "layer" || head[1] != std::to_string(l) ||
            head[2] != std::to_string(d.out) || head[3] != std::to_string(d.in))
            throw Error("checkpoint: bad header for layer " + std::to_string(l));
        for (std::size_t o = 0; o < d.out; ++o) {
            auto row = tokens_of(next_line("weight row"));
            if (row.size() != d.in) throw Error("checkpoint: bad weight row in layer " + std::to_string(l));
            for (std::size_t i = 0; i < d.in; ++i) d.w(o, i) = detail::parse_double(row[i]);
        }
        auto bias = tokens_of(next_line("bias"));
        if (bias.size() != d.out + 1 || bias[0] != "bias")
            throw Error("checkpoint: bad bias line in layer " + std::to_string(l));
        for (std::size_t o = 0; o < d.out; ++o) d.bias[o] = detail::parse_double(bias[o + 1]);
    }
    if (!ck.params.all_finite()) throw Error("checkpoint: non-finite parameter");
    return ck;
}

inline void save_checkpoint(const std::string& path, const MlpSpec& spec, const MlpParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path);
    save_checkpoint(out, spec, params);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read checkpoint " + path);
    return load_checkpoint(in);
}

}  // namespace serlfd
