#include "graylearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graylearn/csv.hpp"
#include "graylearn/errors.hpp"

namespace graylearn {

namespace {

Prediction make_prediction(std::span<const double> probs, std::size_t label) {
    Prediction p;
    p.label = label;
    for (std::size_t k = 1; k < probs.size(); ++k) {
        if (probs[k] > probs[p.predicted]) p.predicted = k;
    }
    p.confidence = probs[p.predicted];
    return p;
}

}  // namespace

PredictionSet predict(const ModelParams& params, const LabeledDataset& data) {
    PredictionSet set;
    set.num_classes = data.num_classes;
    set.items.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto probs = softmax(predict_logits(params, data.features.row(i)));
        set.items.push_back(make_prediction(probs, data.labels[i]));
    }
    return set;
}

PredictionSet predictions_from_logits(const std::vector<std::vector<double>>& logits,
                                      const std::vector<std::size_t>& labels) {
    if (logits.size() != labels.size()) throw ShapeError("predictions_from_logits: length mismatch");
    PredictionSet set;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        set.num_classes = logits[i].size();
        set.items.push_back(make_prediction(softmax(logits[i]), labels[i]));
    }
    return set;
}

std::size_t calibration_bin(double confidence, std::size_t bins) {
    if (!(confidence >= 0.0 && confidence <= 1.0)) throw UsageError("calibration_bin: confidence outside [0, 1]");
    const auto upper = static_cast<std::size_t>(std::ceil(static_cast<double>(bins) * confidence));
    if (upper == 0) return 0;
    return std::min(upper, bins) - 1;
}

double accuracy(const PredictionSet& preds) {
    if (preds.items.empty()) throw UsageError("accuracy: empty prediction set");
    std::size_t correct = 0;
    for (const auto& p : preds.items) correct += p.predicted == p.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

EceResult ece(const PredictionSet& preds, std::size_t bins) {
    if (preds.items.empty()) throw UsageError("ece: empty prediction set");
    if (bins == 0) throw UsageError("ece: need at least one bin");
    EceResult result;
    result.bins.resize(bins);
    std::vector<std::vector<double>> members(bins);
    std::vector<double> conf_sum(bins, 0.0);
    std::vector<std::size_t> correct(bins, 0);
    for (std::size_t b = 0; b < bins; ++b) {
        result.bins[b].low = static_cast<double>(b) / static_cast<double>(bins);
        result.bins[b].high = static_cast<double>(b + 1) / static_cast<double>(bins);
    }
    for (const auto& p : preds.items) {
        const std::size_t b = calibration_bin(p.confidence, bins);
        ++result.bins[b].count;
        members[b].push_back(p.confidence);
        correct[b] += p.predicted == p.label ? 1 : 0;
    }
    // Summing in sorted order makes the result independent of sample order.
    for (std::size_t b = 0; b < bins; ++b) {
        std::sort(members[b].begin(), members[b].end());
        for (double c : members[b]) conf_sum[b] += c;
    }
    const auto n = static_cast<double>(preds.size());
    for (std::size_t b = 0; b < bins; ++b) {
        auto& bin = result.bins[b];
        if (bin.count == 0) continue;
        const auto count = static_cast<double>(bin.count);
        bin.mean_confidence = conf_sum[b] / count;
        bin.accuracy = static_cast<double>(correct[b]) / count;
        result.ece += (count / n) * std::abs(bin.accuracy - bin.mean_confidence);
    }
    return result;
}

MetricsReport evaluate(const ModelParams& params, const LabeledDataset& test) {
    if (test.size() == 0) throw UsageError("evaluate: empty test set");
    if (test.count(Provenance::OutOfDistribution) != 0) {
        throw UsageError("evaluate: test set must contain in-distribution samples only");
    }
    if (params.input_dim() != test.num_features()) {
        throw ShapeError("evaluate: model expects " + std::to_string(params.input_dim()) + " features, test set has " +
                         std::to_string(test.num_features()));
    }
    const PredictionSet preds = predict(params, test);
    MetricsReport report;
    report.samples = preds.size();
    report.accuracy = accuracy(preds);
    auto calibration = ece(preds);
    report.ece = calibration.ece;
    report.bins = std::move(calibration.bins);
    report.per_class_count.assign(test.num_classes, 0);
    report.per_class_correct.assign(test.num_classes, 0);
    for (const auto& p : preds.items) {
        ++report.per_class_count[p.label];
        report.per_class_correct[p.label] += p.predicted == p.label ? 1 : 0;
    }
    for (std::size_t k = 0; k < test.num_classes; ++k) {
        report.per_class_accuracy.push_back(
            report.per_class_count[k] == 0
                ? std::numeric_limits<double>::quiet_NaN()
                : static_cast<double>(report.per_class_correct[k]) / static_cast<double>(report.per_class_count[k]));
    }
    return report;
}

std::string reliability_csv(const std::vector<ReliabilityBin>& bins, const std::string& comment) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += "bin_low,bin_high,count,mean_confidence,accuracy\n";
    for (const auto& b : bins) {
        out += format_double(b.low) + "," + format_double(b.high) + "," + std::to_string(b.count) + "," +
               format_double(b.mean_confidence) + "," + format_double(b.accuracy) + "\n";
    }
    return out;
}

}  // namespace graylearn
