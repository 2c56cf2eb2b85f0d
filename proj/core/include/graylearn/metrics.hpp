#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "graylearn/dataset.hpp"
#include "graylearn/network.hpp"

namespace graylearn {

/// Argmax prediction (ties to the lowest class) and its softmax probability.
struct Prediction {
    std::size_t predicted = 0;
    double confidence = 0.0;
    std::size_t label = 0;
};

struct PredictionSet {
    std::vector<Prediction> items;
    std::size_t num_classes = 0;

    std::size_t size() const { return items.size(); }
};

PredictionSet predict(const ModelParams& params, const LabeledDataset& data);

/// Builds a prediction set directly from per-sample logits.
PredictionSet predictions_from_logits(const std::vector<std::vector<double>>& logits,
                                      const std::vector<std::size_t>& labels);

inline constexpr std::size_t kCalibrationBins = 20;

/// Zero-based bin of `confidence` among `bins` equal-width bins that are
/// closed on the right: bin ceil(bins * c) - 1, with c = 0 in the first bin.
std::size_t calibration_bin(double confidence, std::size_t bins = kCalibrationBins);

struct ReliabilityBin {
    double low = 0.0;
    double high = 0.0;
    std::size_t count = 0;
    /// Both zero for an empty bin.
    double mean_confidence = 0.0;
    double accuracy = 0.0;
};

struct EceResult {
    double ece = 0.0;
    std::vector<ReliabilityBin> bins;
};

double accuracy(const PredictionSet& preds);

/// sum_b (n_b / N) |acc_b - conf_b|.
EceResult ece(const PredictionSet& preds, std::size_t bins = kCalibrationBins);

struct MetricsReport {
    std::size_t samples = 0;
    double accuracy = 0.0;
    double ece = 0.0;
    std::vector<ReliabilityBin> bins;
    std::vector<std::size_t> per_class_count;
    std::vector<std::size_t> per_class_correct;
    /// NaN for classes absent from the test set.
    std::vector<double> per_class_accuracy;
};

/// Accuracy, ECE and per-class accuracy on an all-ID test set. Throws
/// UsageError if the test set holds an OOD-tagged sample.
MetricsReport evaluate(const ModelParams& params, const LabeledDataset& test);

/// Columns bin_low, bin_high, count, mean_confidence, accuracy.
std::string reliability_csv(const std::vector<ReliabilityBin>& bins, const std::string& comment = {});

}  // namespace graylearn
