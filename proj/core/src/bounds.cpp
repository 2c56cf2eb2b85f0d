#include "graylearn/bounds.hpp"

#include <cmath>
#include <string>

#include "graylearn/errors.hpp"

namespace graylearn {

namespace {

double product(std::span<const double> values) {
    double p = 1.0;
    for (double v : values) p *= v;
    return p;
}

void require(bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("bound inputs: ") + what);
}

double sampling_term(const BoundInputs& in, double shared) {
    return 8.0 * in.loss_bound * shared * std::sqrt(2.0 * std::log(16.0 / in.delta));
}

}  // namespace

void BoundInputs::validate() const {
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    require(n_in >= 1 && n_out >= 1, "N_I and N_O must be positive");
    require(input_bound > 0.0 && std::isfinite(input_bound), "B must be positive");
    require(lipschitz > 0.0 && std::isfinite(lipschitz), "L must be positive");
    require(loss_bound > 0.0 && std::isfinite(loss_bound), "c must be positive");
    require(depth >= 1, "depth must be at least 1");
    require(layer_norms.size() == depth, "need one Frobenius bound per layer");
    for (double m : layer_norms) require(m >= 0.0 && std::isfinite(m), "Frobenius bounds must be non-negative");
    require(num_classes >= 2, "K must be at least 2");
    require(std::isfinite(lse_bound), "z must be finite");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    require(discrepancy >= 0.0 && std::isfinite(discrepancy), "d_H must be non-negative");
}

double coef(double alpha, std::size_t n_in, std::size_t n_out) {
    if (n_in == 0 || n_out == 0) throw UsageError("coef: N_I and N_O must be positive");
    const double ni = static_cast<double>(n_in);
    const double no = static_cast<double>(n_out);
    return (alpha * std::sqrt(ni) + (1.0 - alpha) * std::sqrt(no)) / std::sqrt(ni * no);
}

double depth_factor(std::size_t depth) { return std::sqrt(2.0 * static_cast<double>(depth) * std::log(2.0)) + 1.0; }

BoundTerms bound_standard_terms(const BoundInputs& in) {
    in.validate();
    const double shared = coef(in.alpha, in.n_in, in.n_out);
    BoundTerms t;
    t.discrepancy = 2.0 * in.alpha * in.discrepancy;
    t.complexity = 4.0 * in.input_bound * in.lipschitz * shared * depth_factor(in.depth) * product(in.layer_norms);
    t.sampling = sampling_term(in, shared);
    return t;
}

BoundTerms bound_gl_terms(const BoundInputs& in) {
    in.validate();
    if (!(in.lambda > 1.0) || !std::isfinite(in.lambda)) throw UsageError("bound inputs: lambda must exceed 1");
    const double shared = coef(in.alpha, in.n_in, in.n_out);
    BoundTerms t;
    t.discrepancy = 2.0 * in.alpha * in.discrepancy;
    t.complexity = 4.0 * in.input_bound * in.lipschitz * static_cast<double>(in.num_classes) * shared *
                   (in.loss_bound + std::log(2.0 * in.lambda - 2.0));
    t.sampling = sampling_term(in, shared);
    return t;
}

double bound_standard(const BoundInputs& in) { return bound_standard_terms(in).total(); }

double bound_gl(const BoundInputs& in) { return bound_gl_terms(in).total(); }

double lambda_threshold(double input_bound, std::size_t depth, std::span<const double> layer_norms,
                        double lipschitz, std::size_t num_classes, double lse_bound) {
    if (!(lipschitz > 0.0)) throw UsageError("lambda_threshold: L must be positive");
    if (num_classes < 2) throw UsageError("lambda_threshold: K must be at least 2");
    const double exponent = input_bound * depth_factor(depth) * product(layer_norms) /
                                (lipschitz * std::sqrt(static_cast<double>(num_classes))) -
                            lse_bound;
    return 1.0 + 0.5 * std::exp(exponent);
}

double rademacher_term(std::size_t n, double input_bound, std::size_t depth, std::span<const double> layer_norms) {
    if (n == 0) throw UsageError("rademacher_term: N must be positive");
    return std::sqrt(static_cast<double>(n)) * input_bound * depth_factor(depth) * product(layer_norms);
}

double discrepancy_proxy(std::span<const ModelParams> pool, const LabeledDataset& id_data,
                         const LabeledDataset& ood_data, const LossMethod& loss) {
    if (pool.empty()) throw UsageError("discrepancy_proxy: empty hypothesis pool");
    if (id_data.size() == 0 || ood_data.size() == 0) throw UsageError("discrepancy_proxy: empty dataset");
    double best = 0.0;
    for (const auto& params : pool) {
        const double gap = std::abs(empirical_risk_value(loss, params, id_data) -
                                    empirical_risk_value(loss, params, ood_data));
        best = std::max(best, gap);
    }
    return best;
}

}  // namespace graylearn
