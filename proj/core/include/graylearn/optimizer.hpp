#pragma once

#include <cstdint>
#include <string>

#include "graylearn/network.hpp"

namespace graylearn {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;  // SGD only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // SGD only, L2 added to the gradient

    void validate() const;
};

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& text);

/// First-order optimizer state for one training run.
///
/// SGD:  v <- mu v - lr (g + wd theta);  theta <- theta + v
/// Adam: bias-corrected first/second moment estimates.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, const ModelParams& like);

    /// Applies one update in place. Throws NumericError before touching any
    /// parameter if a gradient entry is not finite.
    void step(ModelParams& params, const Gradients& grads);

    double learning_rate() const { return config_.learning_rate; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    std::uint64_t steps() const { return steps_; }
    const OptimizerConfig& config() const { return config_; }

private:
    OptimizerConfig config_;
    std::uint64_t steps_ = 0;
    ModelParams first_;   // velocity (SGD) or m (Adam)
    ModelParams second_;  // v (Adam only)
};

}  // namespace graylearn
