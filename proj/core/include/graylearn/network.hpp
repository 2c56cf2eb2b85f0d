#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "graylearn/matrix.hpp"
#include "graylearn/rng.hpp"

namespace graylearn {

/// One affine layer; `weight` is (outputs x inputs).
struct DenseLayer {
    Matrix weight;
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Weights of a depth-d fully connected network. ReLU follows every layer
/// except the last, whose outputs are the logits.
struct ModelParams {
    std::vector<DenseLayer> layers;

    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;

    /// Throws ShapeError if the layers do not compose.
    void validate() const;

    /// Same layout, all entries zero.
    ModelParams zeros_like() const;

    /// Contiguous parameter blocks in a fixed order: W_1, b_1, W_2, b_2, ...
    std::vector<std::span<double>> blocks();
    std::vector<std::span<const double>> blocks() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients share the parameter layout.
using Gradients = ModelParams;

/// widths = {input, hidden..., output}. He-normal weights, zero biases.
ModelParams init_params(std::span<const std::size_t> widths, Rng& rng);

/// Layout helper: {input, hidden..., output}.
std::vector<std::size_t> layer_widths(std::size_t input, std::span<const std::size_t> hidden,
                                      std::size_t output);

struct ForwardTrace {
    /// activations[0] is the input; activations[l + 1] is the output of layer l
    /// (post-ReLU for hidden layers, identical to the pre-activation for the last).
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre_activations;

    std::span<const double> logits() const { return activations.back(); }
};

ForwardTrace forward(const ModelParams& params, std::span<const double> x);

/// Logits only, without keeping intermediate activations.
std::vector<double> predict_logits(const ModelParams& params, std::span<const double> x);

/// Reverse-mode pass. Adds d(loss)/d(theta) into `grads` given d(loss)/d(logits).
void backward_accumulate(const ModelParams& params, const ForwardTrace& trace,
                         std::span<const double> logit_grad, Gradients& grads);

Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const double> logit_grad);

/// Per-layer Frobenius norm of the weight matrices (biases excluded).
std::vector<double> frobenius_norms(const ModelParams& params);

/// Lower clamp applied to every probability before any logarithm.
inline constexpr double kProbabilityFloor = 1e-7;

/// Plain max-shifted softmax, no clamping.
std::vector<double> softmax_unclamped(std::span<const double> logits);

/// Softmax followed by clamping into [floor, 1 - floor] with the free entries
/// renormalised so the vector still sums to one.
struct ClampedSoftmax {
    std::vector<double> probs;
    /// Entries pinned at the floor; they carry no gradient.
    std::vector<bool> clamped;
};

ClampedSoftmax softmax_clamped(std::span<const double> logits);

inline std::vector<double> softmax(std::span<const double> logits) {
    return softmax_clamped(logits).probs;
}

/// Vector-Jacobian product of softmax_clamped: d(loss)/d(logits) from d(loss)/d(probs).
std::vector<double> softmax_backward(const ClampedSoftmax& s, std::span<const double> prob_grad);

}  // namespace graylearn
