#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graylearn/network.hpp"

namespace graylearn {

struct LabeledDataset;

/// Per-sample training objective.
struct LossMethod {
    enum class Kind { GL, Standard, NL, StandardPlusNL, MAE, Bootstrap };

    Kind kind = Kind::GL;
    /// Weight on the annotated label for Bootstrap; ignored otherwise.
    double beta = 0.95;

    static LossMethod gl() { return {Kind::GL, 0.95}; }
    static LossMethod standard() { return {Kind::Standard, 0.95}; }
    static LossMethod nl() { return {Kind::NL, 0.95}; }
    static LossMethod standard_plus_nl() { return {Kind::StandardPlusNL, 0.95}; }
    static LossMethod mae() { return {Kind::MAE, 0.95}; }
    static LossMethod bootstrap(double beta = 0.95) { return {Kind::Bootstrap, beta}; }

    friend bool operator==(const LossMethod&, const LossMethod&) = default;
};

/// "gl", "standard", "nl", "standard+nl", "mae", "bootstrap" or "bootstrap:<beta>".
LossMethod parse_loss_method(const std::string& text);
std::string to_string(const LossMethod& method);

/// Whether the GL blend weight C = Q(y|x) is differentiated or held constant.
enum class ConfidenceGradient { Full, Detached };

ConfidenceGradient parse_confidence_gradient(const std::string& text);
std::string to_string(ConfidenceGradient mode);

// Class indices are zero-based throughout: y in {0, ..., K-1}.

/// C(x, y) = Q(y|x).
double confidence(std::span<const double> probs, std::size_t y);

/// L_G = -log Q(y|x).
double loss_ground_truth(std::span<const double> probs, std::size_t y);

/// {0..K-1} \ {y}.
std::vector<std::size_t> complementary_set(std::size_t y, std::size_t num_classes);

/// L_C = -sum over complementary labels k of log(1 - Q(k|x)).
double loss_complementary(std::span<const double> probs, std::size_t y);

struct SampleLossBreakdown {
    double confidence = 0.0;
    double loss_g = 0.0;
    double loss_c = 0.0;
    double loss_m = 0.0;
    /// r = L_M - L_G, evaluated in closed form.
    double regularizer = 0.0;
};

/// L_M = C L_G + (1 - C) L_C with C = Q(y|x).
SampleLossBreakdown loss_gl(std::span<const double> probs, std::size_t y);

/// The blend with an externally supplied weight (used to pin C).
double blend_gl(double weight, double loss_g, double loss_c);

/// r = (1-Q_y) log(Q_y (1-Q_y)) - (1-Q_y) sum_k log(1 - Q_k); satisfies L_M = L_G + r.
double regularizer_r(std::span<const double> probs, std::size_t y);

/// Every method except GL. Throws UsageError for GL.
double loss_baseline(const LossMethod& method, std::span<const double> probs, std::size_t y);

/// Per-sample loss for any method; GL yields L_M.
double sample_loss(const LossMethod& method, std::span<const double> probs, std::size_t y,
                   std::optional<double> confidence_override = std::nullopt);

/// d(sample_loss)/d(probs). A confidence override is always treated as a constant.
std::vector<double> sample_loss_prob_grad(const LossMethod& method, std::span<const double> probs,
                                          std::size_t y, ConfidenceGradient mode,
                                          std::optional<double> confidence_override = std::nullopt);

struct RiskOptions {
    ConfidenceGradient confidence_gradient = ConfidenceGradient::Full;
    /// Pins the GL weight for every sample (synthetic experiments only).
    std::optional<double> confidence_override;
};

struct RiskResult {
    double value = 0.0;
    Gradients grads;
    std::vector<double> sample_losses;
};

/// Mean per-sample loss over `indices` of `data`, with gradients. Reduction is
/// in index order. Throws UsageError on an empty batch and NumericError (naming
/// the sample) on a non-finite loss.
RiskResult empirical_risk(const LossMethod& method, const ModelParams& params,
                          const LabeledDataset& data, std::span<const std::size_t> indices,
                          const RiskOptions& options = {});

/// Mean loss over the whole dataset, no gradients.
double empirical_risk_value(const LossMethod& method, const ModelParams& params,
                            const LabeledDataset& data);

}  // namespace graylearn
