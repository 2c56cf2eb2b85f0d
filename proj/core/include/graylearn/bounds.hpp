#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "graylearn/dataset.hpp"
#include "graylearn/losses.hpp"
#include "graylearn/network.hpp"

namespace graylearn {

/// Inputs of the closed-form generalisation bounds.
struct BoundInputs {
    double alpha = 0.1;           ///< OOD proportion
    std::size_t n_in = 1;         ///< N_I
    std::size_t n_out = 1;        ///< N_O
    double input_bound = 1.0;     ///< B, sup ||x||
    double lipschitz = 1.0;       ///< L
    double loss_bound = 1.0;      ///< c, sup |loss|
    std::size_t depth = 1;        ///< d
    std::vector<double> layer_norms{1.0};  ///< M_1..M_d
    std::size_t num_classes = 2;  ///< K
    double lambda = 1.5;          ///< cap on the GL regulariser, > 1
    double lse_bound = 0.0;       ///< z, sup log-sum-exp of the logits
    double delta = 0.05;          ///< failure probability
    double discrepancy = 0.0;     ///< d_H

    /// Everything except lambda, which only bound_gl needs.
    void validate() const;
};

/// Three additive pieces of a bound.
struct BoundTerms {
    double discrepancy = 0.0;  ///< 2 alpha d_H
    double complexity = 0.0;   ///< network / regulariser term
    double sampling = 0.0;     ///< 8 c coef sqrt(2 ln(16/delta))

    double total() const { return discrepancy + complexity + sampling; }
};

/// (alpha sqrt(N_I) + (1 - alpha) sqrt(N_O)) / sqrt(N_I N_O)
double coef(double alpha, std::size_t n_in, std::size_t n_out);

/// sqrt(2 d ln 2) + 1
double depth_factor(std::size_t depth);

BoundTerms bound_standard_terms(const BoundInputs& in);
BoundTerms bound_gl_terms(const BoundInputs& in);

/// 2 alpha d_H + 4 B L coef (sqrt(2 d ln 2) + 1) prod M + 8 c coef sqrt(2 ln(16/delta))
double bound_standard(const BoundInputs& in);

/// 2 alpha d_H + 4 B L K coef (c + log(2 lambda - 2)) + 8 c coef sqrt(2 ln(16/delta)).
/// Throws UsageError unless lambda > 1.
double bound_gl(const BoundInputs& in);

/// 1 + exp(B (sqrt(2 d ln 2) + 1) prod M / (L sqrt K) - z) / 2
double lambda_threshold(double input_bound, std::size_t depth, std::span<const double> layer_norms,
                        double lipschitz, std::size_t num_classes, double lse_bound);

inline double lambda_threshold(const BoundInputs& in) {
    return lambda_threshold(in.input_bound, in.depth, in.layer_norms, in.lipschitz, in.num_classes, in.lse_bound);
}

/// sqrt(N) B (sqrt(2 d ln 2) + 1) prod M
double rademacher_term(std::size_t n, double input_bound, std::size_t depth, std::span<const double> layer_norms);

/// max over the pool of |risk(id) - risk(ood)|. A lower bound on the
/// supremum over the full hypothesis class.
double discrepancy_proxy(std::span<const ModelParams> pool, const LabeledDataset& id_data,
                         const LabeledDataset& ood_data, const LossMethod& loss);

}  // namespace graylearn
