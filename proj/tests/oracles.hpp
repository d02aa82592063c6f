#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's forward or backward code.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "serlfd/approximator.hpp"

namespace oracle {

inline double act(serlfd::Activation a, double x) {
    if (a == serlfd::Activation::relu) return x > 0 ? x : 0;
    if (a == serlfd::Activation::tanh) return std::tanh(x);
    return x;
}

/// Straight-line forward pass written against the raw parameter arrays.
inline std::vector<double> forward(const serlfd::MlpSpec& spec, const serlfd::MlpParams& p,
                                   const std::vector<double>& input) {
    std::vector<double> x = input;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& L = p.layers[l];
        std::vector<double> y(L.out);
        for (std::size_t o = 0; o < L.out; ++o) {
            double s = L.bias[o];
            for (std::size_t i = 0; i < L.in; ++i) s += L.weight[o * L.in + i] * x[i];
            y[o] = act(l + 1 == p.layers.size() ? spec.output_activation : spec.hidden_activation, s);
        }
        x = y;
    }
    return x;
}

/// Visits every parameter entry in layer order.
inline void each_param(serlfd::MlpParams& p, const std::function<void(double&)>& f) {
    for (auto& L : p.layers) {
        for (auto& w : L.weight) f(w);
        for (auto& b : L.bias) f(b);
    }
}

inline std::vector<double> flatten(const std::vector<serlfd::DenseLayer>& layers) {
    std::vector<double> out;
    for (const auto& L : layers) {
        out.insert(out.end(), L.weight.begin(), L.weight.end());
        out.insert(out.end(), L.bias.begin(), L.bias.end());
    }
    return out;
}

/// Central finite differences of loss() with respect to every entry of p.
inline std::vector<double> finite_difference(serlfd::MlpParams& p, const std::function<double()>& loss,
                                             double h = 1e-5) {
    std::vector<double> g;
    each_param(p, [&](double& x) {
        const double keep = x;
        x = keep + h;
        const double up = loss();
        x = keep - h;
        const double down = loss();
        x = keep;
        g.push_back((up - down) / (2 * h));
    });
    return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6) {
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

}  // namespace oracle
