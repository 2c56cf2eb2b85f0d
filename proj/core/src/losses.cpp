#include "graylearn/losses.hpp"

#include <cmath>
#include <cstdlib>

#include "graylearn/dataset.hpp"
#include "graylearn/errors.hpp"

namespace graylearn {

namespace {

void check_label(std::span<const double> probs, std::size_t y) {
    if (y >= probs.size()) {
        throw IndexError("class index " + std::to_string(y) + " out of range for K = " +
                         std::to_string(probs.size()));
    }
}

// 1 - Q_k. For a dominant entry the sum of the others keeps full relative
// precision, which 1 - Q_k loses.
double complement(std::span<const double> probs, std::size_t k) {
    if (probs[k] <= 0.5) return 1.0 - probs[k];
    double rest = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (j != k) rest += probs[j];
    }
    return rest;
}

// log(1 - p) for every entry except `skip`.
double sum_log_one_minus(std::span<const double> probs, std::size_t skip) {
    double total = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (k != skip) total += std::log(complement(probs, k));
    }
    return total;
}

}  // namespace

LossMethod parse_loss_method(const std::string& text) {
    if (text == "gl") return LossMethod::gl();
    if (text == "standard") return LossMethod::standard();
    if (text == "nl") return LossMethod::nl();
    if (text == "standard+nl") return LossMethod::standard_plus_nl();
    if (text == "mae") return LossMethod::mae();
    if (text == "bootstrap") return LossMethod::bootstrap();
    if (text.rfind("bootstrap:", 0) == 0) {
        const std::string tail = text.substr(10);
        char* end = nullptr;
        const double beta = std::strtod(tail.c_str(), &end);
        if (tail.empty() || *end != '\0' || !(beta > 0.0 && beta < 1.0)) {
            throw UsageError("bootstrap beta must be a number in (0, 1), got '" + tail + "'");
        }
        return LossMethod::bootstrap(beta);
    }
    throw UsageError("unknown loss method '" + text +
                     "' (expected gl, standard, nl, standard+nl, mae, bootstrap[:beta])");
}

std::string to_string(const LossMethod& method) {
    switch (method.kind) {
        case LossMethod::Kind::GL: return "gl";
        case LossMethod::Kind::Standard: return "standard";
        case LossMethod::Kind::NL: return "nl";
        case LossMethod::Kind::StandardPlusNL: return "standard+nl";
        case LossMethod::Kind::MAE: return "mae";
        case LossMethod::Kind::Bootstrap: {
            if (method.beta == 0.95) return "bootstrap";
            char buf[32];
            std::snprintf(buf, sizeof buf, "bootstrap:%g", method.beta);
            return buf;
        }
    }
    return "?";
}

ConfidenceGradient parse_confidence_gradient(const std::string& text) {
    if (text == "full") return ConfidenceGradient::Full;
    if (text == "detached") return ConfidenceGradient::Detached;
    throw UsageError("unknown confidence gradient mode '" + text + "' (expected full or detached)");
}

std::string to_string(ConfidenceGradient mode) {
    return mode == ConfidenceGradient::Full ? "full" : "detached";
}

double confidence(std::span<const double> probs, std::size_t y) {
    check_label(probs, y);
    return probs[y];
}

double loss_ground_truth(std::span<const double> probs, std::size_t y) {
    check_label(probs, y);
    return -std::log(probs[y]);
}

std::vector<std::size_t> complementary_set(std::size_t y, std::size_t num_classes) {
    if (num_classes < 2) throw UsageError("complementary_set: need K >= 2");
    if (y >= num_classes) {
        throw IndexError("class index " + std::to_string(y) + " out of range for K = " +
                         std::to_string(num_classes));
    }
    std::vector<std::size_t> out;
    out.reserve(num_classes - 1);
    for (std::size_t k = 0; k < num_classes; ++k) {
        if (k != y) out.push_back(k);
    }
    return out;
}

double loss_complementary(std::span<const double> probs, std::size_t y) {
    check_label(probs, y);
    return -sum_log_one_minus(probs, y);
}

double blend_gl(double weight, double loss_g, double loss_c) {
    return weight * loss_g + (1.0 - weight) * loss_c;
}

SampleLossBreakdown loss_gl(std::span<const double> probs, std::size_t y) {
    SampleLossBreakdown b;
    b.confidence = confidence(probs, y);
    b.loss_g = loss_ground_truth(probs, y);
    b.loss_c = loss_complementary(probs, y);
    b.loss_m = blend_gl(b.confidence, b.loss_g, b.loss_c);
    b.regularizer = regularizer_r(probs, y);
    return b;
}

double regularizer_r(std::span<const double> probs, std::size_t y) {
    check_label(probs, y);
    const double q = probs[y];
    const double rest = complement(probs, y);
    const double log_q_rest = std::log(q) + std::log(rest);
    double all = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) all += std::log(complement(probs, k));
    return rest * log_q_rest - rest * all;
}

double loss_baseline(const LossMethod& method, std::span<const double> probs, std::size_t y) {
    check_label(probs, y);
    switch (method.kind) {
        case LossMethod::Kind::GL:
            throw UsageError("loss_baseline: GL is not a baseline; use loss_gl");
        case LossMethod::Kind::Standard:
            return loss_ground_truth(probs, y);
        case LossMethod::Kind::NL:
            return loss_complementary(probs, y);
        case LossMethod::Kind::StandardPlusNL:
            return 0.5 * loss_ground_truth(probs, y) + 0.5 * loss_complementary(probs, y);
        case LossMethod::Kind::MAE:
            // sum_k |Q_k - 1[k = y]| on the simplex.
            return 2.0 * (1.0 - probs[y]);
        case LossMethod::Kind::Bootstrap: {
            const double beta = method.beta;
            double total = 0.0;
            for (std::size_t k = 0; k < probs.size(); ++k) {
                const double target = (k == y ? beta : 0.0) + (1.0 - beta) * probs[k];
                total -= target * std::log(probs[k]);
            }
            return total;
        }
    }
    throw UsageError("loss_baseline: unknown method");
}

double sample_loss(const LossMethod& method, std::span<const double> probs, std::size_t y,
                   std::optional<double> confidence_override) {
    if (method.kind != LossMethod::Kind::GL) return loss_baseline(method, probs, y);
    const double weight = confidence_override ? *confidence_override : confidence(probs, y);
    return blend_gl(weight, loss_ground_truth(probs, y), loss_complementary(probs, y));
}

std::vector<double> sample_loss_prob_grad(const LossMethod& method, std::span<const double> probs,
                                          std::size_t y, ConfidenceGradient mode,
                                          std::optional<double> confidence_override) {
    check_label(probs, y);
    const std::size_t k_count = probs.size();
    std::vector<double> g(k_count, 0.0);
    const double q = probs[y];

    // Derivatives of -log Q_y and of -sum_{k != y} log(1 - Q_k), scaled.
    auto add_ground_truth = [&](double scale) { g[y] += -scale / q; };
    auto add_complementary = [&](double scale) {
        for (std::size_t k = 0; k < k_count; ++k) {
            if (k != y) g[k] += scale / complement(probs, k);
        }
    };

    switch (method.kind) {
        case LossMethod::Kind::GL: {
            if (confidence_override || mode == ConfidenceGradient::Detached) {
                const double c = confidence_override ? *confidence_override : q;
                add_ground_truth(c);
                add_complementary(1.0 - c);
            } else {
                // d/dQ_y [Q_y L_G + (1 - Q_y) L_C] = L_G - 1 - L_C
                const double lg = -std::log(q);
                const double lc = -sum_log_one_minus(probs, y);
                g[y] += lg - 1.0 - lc;
                add_complementary(1.0 - q);
            }
            break;
        }
        case LossMethod::Kind::Standard:
            add_ground_truth(1.0);
            break;
        case LossMethod::Kind::NL:
            add_complementary(1.0);
            break;
        case LossMethod::Kind::StandardPlusNL:
            add_ground_truth(0.5);
            add_complementary(0.5);
            break;
        case LossMethod::Kind::MAE:
            g[y] = -2.0;
            break;
        case LossMethod::Kind::Bootstrap: {
            const double beta = method.beta;
            for (std::size_t k = 0; k < k_count; ++k) {
                const double target = (k == y ? beta : 0.0) + (1.0 - beta) * probs[k];
                g[k] = -target / probs[k] - (1.0 - beta) * std::log(probs[k]);
            }
            break;
        }
    }
    return g;
}

RiskResult empirical_risk(const LossMethod& method, const ModelParams& params,
                          const LabeledDataset& data, std::span<const std::size_t> indices,
                          const RiskOptions& options) {
    if (indices.empty()) throw UsageError("empirical_risk: empty batch");
    RiskResult result;
    result.grads = params.zeros_like();
    result.sample_losses.reserve(indices.size());
    const double inv_n = 1.0 / static_cast<double>(indices.size());
    double total = 0.0;
    for (std::size_t idx : indices) {
        if (idx >= data.size()) throw IndexError("empirical_risk: sample index out of range");
        const std::size_t y = data.labels[idx];
        ForwardTrace trace = forward(params, data.features.row(idx));
        ClampedSoftmax sm;
        try {
            sm = softmax_clamped(trace.logits());
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at sample " + std::to_string(idx));
        }
        const double loss = sample_loss(method, sm.probs, y, options.confidence_override);
        if (!std::isfinite(loss)) {
            throw NumericError("non-finite loss at sample " + std::to_string(idx));
        }
        result.sample_losses.push_back(loss);
        total += loss;
        std::vector<double> dprobs = sample_loss_prob_grad(method, sm.probs, y, options.confidence_gradient,
                                                           options.confidence_override);
        std::vector<double> dlogits = softmax_backward(sm, dprobs);
        for (double& v : dlogits) v *= inv_n;
        backward_accumulate(params, trace, dlogits, result.grads);
    }
    result.value = total * inv_n;
    return result;
}

double empirical_risk_value(const LossMethod& method, const ModelParams& params,
                            const LabeledDataset& data) {
    if (data.size() == 0) throw UsageError("empirical_risk_value: empty dataset");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto probs = softmax(predict_logits(params, data.features.row(i)));
        total += sample_loss(method, probs, data.labels[i]);
    }
    return total / static_cast<double>(data.size());
}

}  // namespace graylearn
