#include "graylearn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graylearn/errors.hpp"

namespace graylearn {

std::size_t ModelParams::input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }

std::size_t ModelParams::output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
    return n;
}

void ModelParams::validate() const {
    if (layers.empty()) throw ShapeError("ModelParams: depth must be at least 1");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.weight.rows() == 0 || layer.weight.cols() == 0) {
            throw ShapeError("ModelParams: layer " + std::to_string(l) + " has an empty weight matrix");
        }
        if (layer.bias.size() != layer.weight.rows()) {
            throw ShapeError("ModelParams: layer " + std::to_string(l) + " bias length " +
                             std::to_string(layer.bias.size()) + " != " +
                             std::to_string(layer.weight.rows()) + " outputs");
        }
        if (l > 0 && layers[l - 1].weight.rows() != layer.weight.cols()) {
            throw ShapeError("ModelParams: layer " + std::to_string(l) + " expects " +
                             std::to_string(layer.weight.cols()) + " inputs but previous layer emits " +
                             std::to_string(layers[l - 1].weight.rows()));
        }
    }
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z;
    z.layers.reserve(layers.size());
    for (const auto& layer : layers) {
        z.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                            std::vector<double>(layer.bias.size(), 0.0)});
    }
    return z;
}

std::vector<std::span<double>> ModelParams::blocks() {
    std::vector<std::span<double>> out;
    out.reserve(2 * layers.size());
    for (auto& layer : layers) {
        out.push_back(layer.weight.data());
        out.push_back(layer.bias);
    }
    return out;
}

std::vector<std::span<const double>> ModelParams::blocks() const {
    std::vector<std::span<const double>> out;
    out.reserve(2 * layers.size());
    for (const auto& layer : layers) {
        out.push_back(layer.weight.data());
        out.push_back(layer.bias);
    }
    return out;
}

ModelParams init_params(std::span<const std::size_t> widths, Rng& rng) {
    if (widths.size() < 2) throw UsageError("init_params: need at least input and output widths");
    ModelParams params;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const std::size_t fan_out = widths[l + 1];
        if (fan_in == 0 || fan_out == 0) throw UsageError("init_params: zero layer width");
        const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data()) v = sd * rng.normal();
        params.layers.push_back({std::move(w), std::vector<double>(fan_out, 0.0)});
    }
    return params;
}

std::vector<std::size_t> layer_widths(std::size_t input, std::span<const std::size_t> hidden,
                                      std::size_t output) {
    std::vector<std::size_t> widths;
    widths.reserve(hidden.size() + 2);
    widths.push_back(input);
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(output);
    return widths;
}

namespace {

void check_input(const ModelParams& params, std::span<const double> x) {
    if (params.layers.empty()) throw ShapeError("forward: network has no layers");
    if (x.size() != params.input_dim()) {
        throw ShapeError("forward: input has " + std::to_string(x.size()) + " features, network expects " +
                         std::to_string(params.input_dim()));
    }
}

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
    out = matvec(layer.weight, in);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += layer.bias[i];
}

}  // namespace

ForwardTrace forward(const ModelParams& params, std::span<const double> x) {
    check_input(params, x);
    const std::size_t d = params.depth();
    ForwardTrace trace;
    trace.activations.resize(d + 1);
    trace.pre_activations.resize(d);
    trace.activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < d; ++l) {
        affine(params.layers[l], trace.activations[l], trace.pre_activations[l]);
        auto& act = trace.activations[l + 1];
        act = trace.pre_activations[l];
        if (l + 1 < d) {
            for (double& v : act) v = v > 0.0 ? v : 0.0;
        }
    }
    return trace;
}

std::vector<double> predict_logits(const ModelParams& params, std::span<const double> x) {
    check_input(params, x);
    std::vector<double> current(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < params.depth(); ++l) {
        affine(params.layers[l], current, next);
        if (l + 1 < params.depth()) {
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        }
        current.swap(next);
    }
    return current;
}

void backward_accumulate(const ModelParams& params, const ForwardTrace& trace,
                         std::span<const double> logit_grad, Gradients& grads) {
    const std::size_t d = params.depth();
    if (trace.activations.size() != d + 1 || trace.pre_activations.size() != d) {
        throw ShapeError("backward: trace does not match network depth");
    }
    if (logit_grad.size() != params.output_dim()) {
        throw ShapeError("backward: logit gradient has " + std::to_string(logit_grad.size()) +
                         " entries, network has " + std::to_string(params.output_dim()) + " outputs");
    }
    if (grads.depth() != d) throw ShapeError("backward: gradient buffer layout mismatch");

    std::vector<double> delta(logit_grad.begin(), logit_grad.end());
    for (std::size_t l = d; l-- > 0;) {
        const auto& layer = params.layers[l];
        auto& g = grads.layers[l];
        add_outer(g.weight, delta, trace.activations[l]);
        for (std::size_t i = 0; i < delta.size(); ++i) g.bias[i] += delta[i];
        if (l == 0) break;
        std::vector<double> upstream = matvec_transposed(layer.weight, delta);
        const auto& pre = trace.pre_activations[l - 1];
        // ReLU subgradient at 0 is 0.
        for (std::size_t i = 0; i < upstream.size(); ++i) {
            if (!(pre[i] > 0.0)) upstream[i] = 0.0;
        }
        delta.swap(upstream);
    }
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const double> logit_grad) {
    Gradients grads = params.zeros_like();
    backward_accumulate(params, trace, logit_grad, grads);
    return grads;
}

std::vector<double> frobenius_norms(const ModelParams& params) {
    std::vector<double> norms;
    norms.reserve(params.depth());
    for (const auto& layer : params.layers) norms.push_back(layer.weight.frobenius_norm());
    return norms;
}

std::vector<double> softmax_unclamped(std::span<const double> logits) {
    if (logits.size() < 2) throw ShapeError("softmax: need at least two logits");
    for (double z : logits) {
        if (!std::isfinite(z)) throw NumericError("softmax: non-finite logit");
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = std::exp(logits[k] - peak);
        total += p[k];
    }
    for (double& v : p) v /= total;
    return p;
}

ClampedSoftmax softmax_clamped(std::span<const double> logits) {
    std::vector<double> raw = softmax_unclamped(logits);
    const std::size_t k = raw.size();
    ClampedSoftmax out{raw, std::vector<bool>(k, false)};

    // Pin entries below the floor and rescale the remaining ones to fill the
    // leftover mass; repeat until no free entry drops below the floor. With
    // every entry >= floor and a unit sum, each entry is <= 1 - (K-1) floor.
    std::size_t pinned = 0;
    for (;;) {
        double free_mass = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (!out.clamped[i]) free_mass += raw[i];
        }
        const double target = 1.0 - static_cast<double>(pinned) * kProbabilityFloor;
        bool changed = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (out.clamped[i]) {
                out.probs[i] = kProbabilityFloor;
                continue;
            }
            out.probs[i] = raw[i] * (target / free_mass);
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (!out.clamped[i] && out.probs[i] < kProbabilityFloor) {
                out.clamped[i] = true;
                out.probs[i] = kProbabilityFloor;
                ++pinned;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return out;
}

std::vector<double> softmax_backward(const ClampedSoftmax& s, std::span<const double> prob_grad) {
    const std::size_t k = s.probs.size();
    if (prob_grad.size() != k) throw ShapeError("softmax_backward: gradient length mismatch");
    // Free entries equal (1 - m*floor) * restricted-softmax; clamped ones are constant.
    std::size_t pinned = 0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (s.clamped[j]) {
            ++pinned;
        } else {
            weighted += prob_grad[j] * s.probs[j];
        }
    }
    const double free_mass = 1.0 - static_cast<double>(pinned) * kProbabilityFloor;
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (s.clamped[i]) continue;
        const double q = s.probs[i] / free_mass;
        out[i] = prob_grad[i] * s.probs[i] - q * weighted;
    }
    return out;
}

}  // namespace graylearn
