#include "graylearn/optimizer.hpp"

#include <cmath>

#include "graylearn/errors.hpp"

namespace graylearn {

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw UsageError("optimizer: learning rate must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("optimizer: momentum must be in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw UsageError("optimizer: Adam betas must be in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw UsageError("optimizer: epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw UsageError("optimizer: weight decay must be non-negative");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(const std::string& text) {
    if (text == "sgd") return OptimizerKind::Sgd;
    if (text == "adam") return OptimizerKind::Adam;
    throw UsageError("unknown optimizer '" + text + "' (expected sgd or adam)");
}

Optimizer::Optimizer(OptimizerConfig config, const ModelParams& like)
    : config_(config), first_(like.zeros_like()) {
    config_.validate();
    if (config_.kind == OptimizerKind::Adam) second_ = like.zeros_like();
}

void Optimizer::step(ModelParams& params, const Gradients& grads) {
    auto theta = params.blocks();
    auto g = grads.blocks();
    auto m = first_.blocks();
    if (theta.size() != g.size() || theta.size() != m.size()) {
        throw ShapeError("optimizer: gradient layout does not match parameters");
    }
    for (std::size_t b = 0; b < theta.size(); ++b) {
        if (theta[b].size() != g[b].size() || theta[b].size() != m[b].size()) {
            throw ShapeError("optimizer: gradient block " + std::to_string(b) + " has wrong size");
        }
        for (double v : g[b]) {
            if (!std::isfinite(v)) throw NumericError("optimizer: non-finite gradient, step aborted");
        }
    }

    ++steps_;
    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerKind::Sgd) {
        const double mu = config_.momentum;
        const double wd = config_.weight_decay;
        for (std::size_t b = 0; b < theta.size(); ++b) {
            for (std::size_t i = 0; i < theta[b].size(); ++i) {
                m[b][i] = mu * m[b][i] - lr * (g[b][i] + wd * theta[b][i]);
                theta[b][i] += m[b][i];
            }
        }
        return;
    }

    auto v = second_.blocks();
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double t = static_cast<double>(steps_);
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);
    for (std::size_t b = 0; b < theta.size(); ++b) {
        for (std::size_t i = 0; i < theta[b].size(); ++i) {
            const double gi = g[b][i];
            m[b][i] = b1 * m[b][i] + (1.0 - b1) * gi;
            v[b][i] = b2 * v[b][i] + (1.0 - b2) * gi * gi;
            const double m_hat = m[b][i] / correction1;
            const double v_hat = v[b][i] / correction2;
            theta[b][i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

}  // namespace graylearn
