#include "graylearn/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "graylearn/errors.hpp"
#include "graylearn/rng.hpp"

namespace graylearn {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5f1e;

}  // namespace

void TrainConfig::validate() const {
    if (epochs == 0) throw UsageError("train: epochs must be at least 1");
    if (batch_size == 0) throw UsageError("train: batch size must be at least 1");
    optimizer.validate();
    for (std::size_t i = 0; i < lr_schedule.size(); ++i) {
        if (i > 0 && lr_schedule[i].first <= lr_schedule[i - 1].first) {
            throw UsageError("train: learning-rate schedule epochs must be strictly increasing");
        }
        if (!(lr_schedule[i].second > 0.0) || !std::isfinite(lr_schedule[i].second)) {
            throw UsageError("train: learning-rate multipliers must be positive");
        }
    }
    for (std::size_t w : hidden_layout) {
        if (w == 0) throw UsageError("train: hidden layer widths must be positive");
    }
    if (method.kind == LossMethod::Kind::Bootstrap && !(method.beta > 0.0 && method.beta < 1.0)) {
        throw UsageError("train: bootstrap beta must lie in (0, 1)");
    }
    if (confidence_override && !(*confidence_override >= 0.0 && *confidence_override <= 1.0)) {
        throw UsageError("train: confidence override must lie in [0, 1]");
    }
}

TrainConfig TrainConfig::tabular_preset() {
    TrainConfig c;
    c.epochs = 10;
    c.batch_size = 16;
    c.optimizer.kind = OptimizerKind::Adam;
    c.optimizer.learning_rate = 1e-3;
    c.hidden_layout = {128, 128};
    return c;
}

TrainConfig TrainConfig::imagery_preset() {
    TrainConfig c;
    c.epochs = 200;
    c.batch_size = 128;
    c.optimizer.kind = OptimizerKind::Sgd;
    c.optimizer.learning_rate = 0.1;
    c.optimizer.momentum = 0.9;
    c.lr_schedule = {{100, 0.1}, {150, 0.1}};
    c.hidden_layout = {128, 128};
    return c;
}

EpochStats dataset_stats(const LossMethod& method, const ModelParams& params, const LabeledDataset& data) {
    EpochStats s;
    if (data.size() == 0) throw UsageError("dataset_stats: empty dataset");
    double loss = 0.0;
    double conf_id = 0.0;
    double conf_ood = 0.0;
    std::size_t n_id = 0;
    std::size_t n_ood = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> probs;
        try {
            probs = softmax(predict_logits(params, data.features.row(i)));
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at sample " + std::to_string(i));
        }
        const std::size_t y = data.labels[i];
        loss += sample_loss(method, probs, y);
        std::size_t best = 0;
        for (std::size_t k = 1; k < probs.size(); ++k) {
            if (probs[k] > probs[best]) best = k;
        }
        if (best == y) ++correct;
        if (data.provenance[i] == Provenance::InDistribution) {
            conf_id += probs[y];
            ++n_id;
        } else {
            conf_ood += probs[y];
            ++n_ood;
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto n = static_cast<double>(data.size());
    s.mean_loss = loss / n;
    s.train_accuracy = static_cast<double>(correct) / n;
    s.mean_confidence_id = n_id ? conf_id / static_cast<double>(n_id) : nan;
    s.mean_confidence_ood = n_ood ? conf_ood / static_cast<double>(n_ood) : nan;
    return s;
}

TrainRecord train(const TrainConfig& config, const LabeledDataset& data) {
    config.validate();
    data.validate();
    Rng init_rng(derive_seed(config.seed, kInitStream));
    const auto widths = layer_widths(data.num_features(), config.hidden_layout, data.num_classes);
    return train_from(config, data, init_params(widths, init_rng));
}

TrainRecord train_from(const TrainConfig& config, const LabeledDataset& data, ModelParams initial) {
    config.validate();
    data.validate();
    if (data.size() == 0) throw UsageError("train: empty training set");
    initial.validate();
    if (initial.input_dim() != data.num_features() || initial.output_dim() != data.num_classes) {
        throw ShapeError("train: network layout does not match the data (" + std::to_string(data.num_features()) +
                         " features, " + std::to_string(data.num_classes) + " classes)");
    }
    const auto start = std::chrono::steady_clock::now();

    TrainRecord record;
    record.params = std::move(initial);
    try {
        record.initial = dataset_stats(config.method, record.params, data);
    } catch (const NumericError& e) {
        throw NumericError(std::string("evaluation of the initial network failed: ") + e.what());
    }

    Optimizer optimizer(config.optimizer, record.params);
    Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const RiskOptions options{config.confidence_gradient, config.confidence_override};

    std::size_t schedule_pos = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        while (schedule_pos < config.lr_schedule.size() && config.lr_schedule[schedule_pos].first <= epoch) {
            if (config.lr_schedule[schedule_pos].first == epoch) {
                optimizer.set_learning_rate(optimizer.learning_rate() * config.lr_schedule[schedule_pos].second);
            }
            ++schedule_pos;
        }
        shuffle_rng.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        std::size_t batch = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const std::span<const std::size_t> indices(order.data() + begin, end - begin);
            auto where = [&] {
                return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch);
            };
            RiskResult risk;
            try {
                risk = empirical_risk(config.method, record.params, data, indices, options);
            } catch (const NumericError& e) {
                throw NumericError("training aborted at " + where() + ": " + e.what());
            }
            loss_sum += risk.value * static_cast<double>(indices.size());
            try {
                optimizer.step(record.params, risk.grads);
            } catch (const NumericError& e) {
                throw NumericError("training aborted at " + where() + ": " + e.what());
            }
        }

        EpochStats stats;
        try {
            stats = dataset_stats(config.method, record.params, data);
        } catch (const NumericError& e) {
            throw NumericError("training aborted after epoch " + std::to_string(epoch) + ": " + e.what());
        }
        stats.mean_loss = loss_sum / static_cast<double>(data.size());
        record.epochs.push_back(stats);
    }
    record.optimizer_steps = optimizer.steps();
    record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return record;
}

std::vector<double> confidence_gap(const TrainRecord& record) {
    std::vector<double> gap;
    gap.reserve(record.epochs.size());
    for (const auto& e : record.epochs) {
        if (std::isnan(e.mean_confidence_id) || std::isnan(e.mean_confidence_ood)) {
            throw UsageError("confidence_gap: training data lacked ID or OOD samples");
        }
        gap.push_back(e.mean_confidence_id - e.mean_confidence_ood);
    }
    return gap;
}

}  // namespace graylearn
