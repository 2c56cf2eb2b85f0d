#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "graylearn/dataset.hpp"
#include "graylearn/losses.hpp"
#include "graylearn/network.hpp"
#include "graylearn/rng.hpp"

namespace graylearn::testing {

inline constexpr double kFdStep = 1e-5;
/// Coordinates whose gradient is smaller than this are compared in absolute
/// terms: central differences carry roughly 1e-10 of rounding and truncation
/// noise, which would swamp a relative comparison near zero.
inline constexpr double kRelativeFloor = 1e-4;

struct GradCheckResult {
    std::size_t instances = 0;
    std::size_t coordinates = 0;
    std::size_t rejected = 0;
    double max_rel_error = 0.0;
    std::string worst;
};

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
    return std::abs(analytic - numeric) / scale;
}

/// A random small network and batch for which every hidden pre-activation is
/// at least 1e-3 away from the ReLU kink and every probability is well inside
/// the clamp, so the loss is smooth within +-h of the evaluation point.
struct GradInstance {
    ModelParams params;
    LabeledDataset data;
    std::vector<std::size_t> batch;
};

inline bool smooth_at(const ModelParams& params, const LabeledDataset& data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ForwardTrace trace = forward(params, data.features.row(i));
        for (std::size_t l = 0; l + 1 < trace.pre_activations.size(); ++l) {
            for (double z : trace.pre_activations[l]) {
                if (std::abs(z) < 1e-3) return false;
            }
        }
        for (double p : softmax_unclamped(trace.logits())) {
            if (p < 1e-5 || p > 1.0 - 1e-5) return false;
        }
    }
    return true;
}

inline GradInstance random_instance(Rng& rng, std::size_t& rejected) {
    static const std::vector<std::vector<std::size_t>> layouts{{}, {5}, {4, 3}, {6, 6}};
    for (;;) {
        const std::size_t k = 2 + rng.below(5);
        const std::size_t f = 2 + rng.below(3);
        const auto& hidden = layouts[rng.below(layouts.size())];
        GradInstance inst;
        inst.params = init_params(layer_widths(f, hidden, k), rng);
        for (auto& layer : inst.params.layers) {
            for (auto& b : layer.bias) b = 0.3 * rng.normal();
        }
        inst.data.num_classes = k;
        const std::size_t n = 1 + rng.below(4);
        std::vector<double> x(f);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : x) v = rng.normal();
            inst.data.push_back(x, rng.below(k), Provenance::InDistribution);
        }
        inst.batch.resize(n);
        std::iota(inst.batch.begin(), inst.batch.end(), std::size_t{0});
        if (rng.below(2) == 1 && n > 1) inst.batch.push_back(0);  // duplicates are legal batch members
        if (smooth_at(inst.params, inst.data)) return inst;
        ++rejected;
    }
}

/// Central-difference check of empirical_risk's gradient for one method.
/// In detached mode the reference objective pins each sample's weight at its
/// value in the unperturbed model.
inline GradCheckResult check_gradients(const LossMethod& method, ConfidenceGradient mode, std::size_t instances,
                                       std::uint64_t seed) {
    GradCheckResult result;
    Rng rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        GradInstance inst = random_instance(rng, result.rejected);
        RiskOptions options;
        options.confidence_gradient = mode;
        const RiskResult analytic = empirical_risk(method, inst.params, inst.data, inst.batch, options);

        std::vector<double> pinned;
        const bool detached = method.kind == LossMethod::Kind::GL && mode == ConfidenceGradient::Detached;
        if (detached) {
            for (std::size_t i : inst.batch) {
                pinned.push_back(confidence(softmax(predict_logits(inst.params, inst.data.features.row(i))),
                                            inst.data.labels[i]));
            }
        }
        auto objective = [&](const ModelParams& p) {
            if (!detached) return empirical_risk(method, p, inst.data, inst.batch, options).value;
            double total = 0.0;
            for (std::size_t j = 0; j < inst.batch.size(); ++j) {
                const std::size_t one[1] = {inst.batch[j]};
                RiskOptions pin;
                pin.confidence_override = pinned[j];
                total += empirical_risk(method, p, inst.data, one, pin).value;
            }
            return total / static_cast<double>(inst.batch.size());
        };

        ModelParams probe = inst.params;
        for (std::size_t l = 0; l < probe.layers.size(); ++l) {
            auto check = [&](double& slot, double grad, const std::string& where) {
                const double saved = slot;
                slot = saved + kFdStep;
                const double up = objective(probe);
                slot = saved - kFdStep;
                const double down = objective(probe);
                slot = saved;
                const double numeric = (up - down) / (2.0 * kFdStep);
                const double err = relative_error(grad, numeric);
                ++result.coordinates;
                if (err > result.max_rel_error) {
                    result.max_rel_error = err;
                    result.worst = "instance " + std::to_string(t) + " " + where + " analytic " +
                                   std::to_string(grad) + " numeric " + std::to_string(numeric);
                }
            };
            auto& w = probe.layers[l].weight;
            const auto& gw = analytic.grads.layers[l].weight;
            for (std::size_t i = 0; i < w.size(); ++i) {
                check(w.data()[i], gw.data()[i], "W" + std::to_string(l + 1) + "[" + std::to_string(i) + "]");
            }
            auto& b = probe.layers[l].bias;
            const auto& gb = analytic.grads.layers[l].bias;
            for (std::size_t i = 0; i < b.size(); ++i) {
                check(b[i], gb[i], "b" + std::to_string(l + 1) + "[" + std::to_string(i) + "]");
            }
        }
        ++result.instances;
    }
    return result;
}

/// Every method of the loss family, with GL in both weight-gradient modes.
struct MethodCase {
    std::string name;
    LossMethod method;
    ConfidenceGradient mode;
};

inline std::vector<MethodCase> all_method_cases() {
    return {{"gl/full", LossMethod::gl(), ConfidenceGradient::Full},
            {"gl/detached", LossMethod::gl(), ConfidenceGradient::Detached},
            {"standard", LossMethod::standard(), ConfidenceGradient::Full},
            {"nl", LossMethod::nl(), ConfidenceGradient::Full},
            {"standard+nl", LossMethod::standard_plus_nl(), ConfidenceGradient::Full},
            {"mae", LossMethod::mae(), ConfidenceGradient::Full},
            {"bootstrap:0.95", LossMethod::bootstrap(0.95), ConfidenceGradient::Full},
            {"bootstrap:0.6", LossMethod::bootstrap(0.6), ConfidenceGradient::Full}};
}

}  // namespace graylearn::testing
