#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "graylearn/dataset.hpp"
#include "graylearn/losses.hpp"
#include "graylearn/network.hpp"
#include "graylearn/optimizer.hpp"

namespace graylearn {

struct TrainConfig {
    LossMethod method = LossMethod::gl();
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    OptimizerConfig optimizer;
    /// (epoch, multiplier): at the start of that zero-based epoch the learning
    /// rate is multiplied by `multiplier`. Epochs strictly increasing.
    std::vector<std::pair<std::size_t, double>> lr_schedule;
    std::uint64_t seed = 0;
    ConfidenceGradient confidence_gradient = ConfidenceGradient::Full;
    std::vector<std::size_t> hidden_layout{128, 128};
    /// Pins the GL weight (synthetic experiments).
    std::optional<double> confidence_override;

    void validate() const;

    /// 2 x 128 ReLU, Adam(1e-3), 10 epochs, batch 16.
    static TrainConfig tabular_preset();
    /// SGD(0.1, momentum 0.9), x0.1 at epochs 100 and 150, 200 epochs, batch 128.
    static TrainConfig imagery_preset();
};

/// Statistics from a full pass of the end-of-epoch model over the training set.
struct EpochStats {
    /// Mean of the per-sample losses seen by the optimizer during the epoch.
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
    /// Mean Q(y|x) over ID-tagged / OOD-tagged samples; NaN if there are none.
    double mean_confidence_id = 0.0;
    double mean_confidence_ood = 0.0;
};

struct TrainRecord {
    /// Same statistics for the freshly initialised model (mean_loss is the
    /// full-pass loss there).
    EpochStats initial;
    std::vector<EpochStats> epochs;
    ModelParams params;
    std::uint64_t optimizer_steps = 0;
    double wall_clock_seconds = 0.0;
};

/// Mini-batch training with a seeded shuffle per epoch. Deterministic in
/// (config, data). Throws NumericError naming epoch/batch/sample when a loss
/// is not finite.
TrainRecord train(const TrainConfig& config, const LabeledDataset& data);

/// Training from given initial parameters (used for checkpoint pools).
TrainRecord train_from(const TrainConfig& config, const LabeledDataset& data, ModelParams initial);

/// Statistics of `params` on `data` (accuracy, mean confidences, mean loss).
EpochStats dataset_stats(const LossMethod& method, const ModelParams& params, const LabeledDataset& data);

/// Per-epoch mean ID confidence minus mean OOD confidence.
/// Throws UsageError if either provenance was absent from the training data.
std::vector<double> confidence_gap(const TrainRecord& record);

}  // namespace graylearn
