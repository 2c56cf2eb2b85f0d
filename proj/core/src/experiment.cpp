#include "graylearn/experiment.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "graylearn/rng.hpp"

namespace graylearn {

namespace {

enum Stream : std::uint64_t { kData = 1, kSplit = 2, kMix = 3, kTrain = 4 };

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "data.source",        "data.classes",         "data.n_per_class",   "data.features",
        "data.center_scale",  "data.noise_sd",        "data.path",          "data.label_column",
        "data.has_header",    "data.standardize",     "data.test_fraction", "ood.source",
        "ood.classes",        "ood.n_per_class",      "ood.path",           "ood.label_column",
        "ood.has_header",     "mixture.alpha",        "mixture.labeling",   "mixture.subset",
        "mixture.subsets",    "train.preset",         "train.method",       "train.epochs",
        "train.batch_size",   "train.optimizer",      "train.learning_rate", "train.momentum",
        "train.weight_decay", "train.hidden",         "train.confidence_gradient", "train.schedule",
        "experiment.seeds",   "experiment.alphas",    "experiment.out",
    };
    return keys;
}

template <typename Fn>
auto field(const ConfigFile& file, const std::string& key, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        file.fail(key, e.what());
    }
}

CsvSource parse_csv_source(const ConfigFile& file, const std::string& section) {
    CsvSource src;
    src.path = file.get_string(section + ".path", "");
    src.label_column = file.get_string(section + ".label_column", "last");
    src.has_header = file.get_bool(section + ".has_header", true);
    if (src.path.empty()) file.fail(section + ".path", "required when " + section + ".source = csv");
    return src;
}

std::vector<std::pair<std::size_t, double>> parse_schedule(const ConfigFile& file) {
    std::vector<std::pair<std::size_t, double>> schedule;
    const std::string key = "train.schedule";
    for (const auto& item : file.get_string_list(key, {})) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) file.fail(key, "expected epoch:multiplier, found '" + item + "'");
        ConfigFile tmp = ConfigFile::parse("e = " + item.substr(0, colon) + "\nm = " + item.substr(colon + 1));
        std::size_t epoch = 0;
        double mult = 0.0;
        try {
            epoch = tmp.get_size("e", 0);
            mult = tmp.get_double("m", 0.0);
        } catch (const ConfigError&) {
            file.fail(key, "expected epoch:multiplier, found '" + item + "'");
        }
        schedule.emplace_back(epoch, mult);
    }
    return schedule;
}

void standardize(PreparedData& d) {
    const std::size_t f = d.train.num_features();
    const auto n = static_cast<double>(d.train.size());
    std::vector<double> mean(f, 0.0), sd(f, 0.0);
    for (std::size_t i = 0; i < d.train.size(); ++i) {
        auto row = d.train.features.row(i);
        for (std::size_t j = 0; j < f; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= n;
    for (std::size_t i = 0; i < d.train.size(); ++i) {
        auto row = d.train.features.row(i);
        for (std::size_t j = 0; j < f; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    }
    for (double& s : sd) {
        s = std::sqrt(s / n);
        if (!(s > 0.0)) s = 1.0;
    }
    for (LabeledDataset* set : {&d.train, &d.test}) {
        for (std::size_t i = 0; i < set->size(); ++i) {
            auto row = set->features.row(i);
            for (std::size_t j = 0; j < f; ++j) row[j] = (row[j] - mean[j]) / sd[j];
        }
    }
}

// ID blobs (classes 0..K-1) and an OOD pool of further blob classes drawn
// from the same generator, so both share scale and noise.
std::pair<LabeledDataset, LabeledDataset> blob_universe(const BlobSpec& base, std::size_t ood_classes,
                                                        std::size_t ood_per_class) {
    BlobSpec all = base;
    all.num_classes = base.num_classes + ood_classes;
    const Matrix centers = blob_centers(all);
    Rng rng(derive_seed(base.seed, 1));
    std::vector<double> x(base.num_features);
    auto draw = [&](std::size_t center, LabeledDataset& out, std::size_t label, Provenance tag,
                    std::optional<std::size_t> source) {
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = centers(center, j) + base.noise_sd * rng.normal();
        out.push_back(x, label, tag, source);
    };
    LabeledDataset id;
    id.num_classes = base.num_classes;
    id.features = Matrix(0, base.num_features);
    for (std::size_t k = 0; k < base.num_classes; ++k) {
        for (std::size_t i = 0; i < base.n_per_class; ++i) draw(k, id, k, Provenance::InDistribution, std::nullopt);
    }
    LabeledDataset pool;
    pool.num_classes = ood_classes;
    pool.features = Matrix(0, base.num_features);
    for (std::size_t k = 0; k < ood_classes; ++k) {
        for (std::size_t i = 0; i < ood_per_class; ++i) {
            draw(base.num_classes + k, pool, k, Provenance::OutOfDistribution, k);
        }
    }
    return {std::move(id), std::move(pool)};
}

}  // namespace

std::uint64_t run_stream(std::uint64_t seed, std::uint64_t stream) { return derive_seed(seed, stream); }

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw UsageError("experiment: seed list is empty");
    mixture.validate();
    train.validate();
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw UsageError("experiment: every alpha must lie in [0, 1]");
    }
}

ExperimentConfig parse_experiment_config(const ConfigFile& file) {
    file.reject_unknown(known_keys());
    ExperimentConfig c;
    c.config_hash = file.hash();

    const std::string data_source = file.get_string("data.source", "blobs");
    if (data_source == "blobs") {
        c.data.kind = DataSourceKind::Blobs;
    } else if (data_source == "csv") {
        c.data.kind = DataSourceKind::Csv;
        c.data.csv = parse_csv_source(file, "data");
    } else {
        file.fail("data.source", "expected blobs or csv, found '" + data_source + "'");
    }
    c.data.blobs.num_classes = file.get_size("data.classes", 3);
    c.data.blobs.n_per_class = file.get_size("data.n_per_class", 50);
    c.data.blobs.num_features = file.get_size("data.features", 2);
    c.data.blobs.centers_scale = file.get_double("data.center_scale", 5.0);
    c.data.blobs.noise_sd = file.get_double("data.noise_sd", 1.0);
    c.data.standardize = file.get_bool("data.standardize", false);
    c.data.test_fraction = file.get_double("data.test_fraction", 0.3);
    if (!(c.data.test_fraction > 0.0 && c.data.test_fraction < 1.0)) {
        file.fail("data.test_fraction", "must lie in (0, 1)");
    }
    if (c.data.kind == DataSourceKind::Blobs) {
        if (c.data.blobs.num_classes < 2) file.fail("data.classes", "need at least 2 classes");
        if (c.data.blobs.n_per_class == 0) file.fail("data.n_per_class", "must be positive");
        if (c.data.blobs.num_features == 0) file.fail("data.features", "must be positive");
        if (!(c.data.blobs.centers_scale > 0.0)) file.fail("data.center_scale", "must be positive");
        if (!(c.data.blobs.noise_sd >= 0.0)) file.fail("data.noise_sd", "must be non-negative");
    }

    const std::string ood_source = file.get_string("ood.source", "blobs");
    if (ood_source == "none") {
        c.ood.kind = OodSourceKind::None;
    } else if (ood_source == "blobs") {
        c.ood.kind = OodSourceKind::Blobs;
        if (c.data.kind != DataSourceKind::Blobs) file.fail("ood.source", "blobs OOD source needs data.source = blobs");
    } else if (ood_source == "smallest_class") {
        c.ood.kind = OodSourceKind::SmallestClass;
    } else if (ood_source == "csv") {
        c.ood.kind = OodSourceKind::Csv;
        c.ood.csv = parse_csv_source(file, "ood");
    } else {
        file.fail("ood.source", "expected none, blobs, smallest_class or csv, found '" + ood_source + "'");
    }
    c.ood.blob_classes = file.get_size("ood.classes", 10);
    c.ood.blob_n_per_class = file.get_size("ood.n_per_class", 100);
    if (c.ood.kind == OodSourceKind::Blobs && c.ood.blob_classes < 2) file.fail("ood.classes", "need at least 2 classes");

    c.mixture.alpha = file.get_double("mixture.alpha", 0.1);
    if (!(c.mixture.alpha >= 0.0 && c.mixture.alpha <= 1.0)) file.fail("mixture.alpha", "must lie in [0, 1]");
    c.mixture.labeling = field(file, "mixture.labeling",
                               [&] { return parse_ood_labeling(file.get_string("mixture.labeling", "specific")); });
    if (file.has("mixture.subset")) c.mixture.ood_subset = file.get_size("mixture.subset", 0);
    c.mixture.ood_subset_count = file.get_size("mixture.subsets", 10);
    field(file, "mixture.subset", [&] { c.mixture.validate(); });
    if (c.ood.kind == OodSourceKind::None && c.mixture.alpha > 0.0) {
        file.fail("mixture.alpha", "must be 0 when ood.source = none");
    }

    const std::string preset = file.get_string("train.preset", "tabular");
    if (preset == "tabular") {
        c.train = TrainConfig::tabular_preset();
    } else if (preset == "imagery") {
        c.train = TrainConfig::imagery_preset();
    } else {
        file.fail("train.preset", "expected tabular or imagery, found '" + preset + "'");
    }
    c.train.method = field(file, "train.method", [&] { return parse_loss_method(file.get_string("train.method", "gl")); });
    c.train.epochs = file.get_size("train.epochs", c.train.epochs);
    if (c.train.epochs == 0) file.fail("train.epochs", "must be at least 1");
    c.train.batch_size = file.get_size("train.batch_size", c.train.batch_size);
    if (c.train.batch_size == 0) file.fail("train.batch_size", "must be at least 1");
    c.train.optimizer.kind = field(file, "train.optimizer", [&] {
        return parse_optimizer_kind(file.get_string("train.optimizer", to_string(c.train.optimizer.kind)));
    });
    c.train.optimizer.learning_rate = file.get_double("train.learning_rate", c.train.optimizer.learning_rate);
    c.train.optimizer.momentum = file.get_double("train.momentum", c.train.optimizer.momentum);
    c.train.optimizer.weight_decay = file.get_double("train.weight_decay", c.train.optimizer.weight_decay);
    field(file, "train.learning_rate", [&] { c.train.optimizer.validate(); });
    c.train.hidden_layout = file.get_size_list("train.hidden", c.train.hidden_layout);
    c.train.confidence_gradient = field(file, "train.confidence_gradient", [&] {
        return parse_confidence_gradient(file.get_string("train.confidence_gradient", "full"));
    });
    if (file.has("train.schedule")) c.train.lr_schedule = parse_schedule(file);
    field(file, "train.schedule", [&] { c.train.validate(); });

    c.seeds = file.get_u64_list("experiment.seeds", c.seeds);
    if (c.seeds.empty()) file.fail("experiment.seeds", "need at least one seed");
    c.alphas = file.get_double_list("experiment.alphas", {});
    for (double a : c.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) file.fail("experiment.alphas", "every alpha must lie in [0, 1]");
    }
    c.output_dir = file.get_string("experiment.out", c.output_dir);
    return c;
}

PreparedData prepare_data(const ExperimentConfig& config, const MixtureSpec& mixture, std::uint64_t seed) {
    LabeledDataset id;
    LabeledDataset pool;
    if (config.data.kind == DataSourceKind::Blobs) {
        BlobSpec spec = config.data.blobs;
        spec.seed = run_stream(seed, kData);
        if (config.ood.kind == OodSourceKind::Blobs) {
            std::tie(id, pool) = blob_universe(spec, config.ood.blob_classes, config.ood.blob_n_per_class);
        } else {
            id = gen_blobs(spec);
        }
    } else {
        id = load_csv(config.data.csv.path, config.data.csv.label_column, config.data.csv.has_header);
    }
    if (config.ood.kind == OodSourceKind::SmallestClass) {
        std::tie(id, pool) = make_smallest_class_ood(id);
    } else if (config.ood.kind == OodSourceKind::Csv) {
        pool = load_csv(config.ood.csv.path, config.ood.csv.label_column, config.ood.csv.has_header);
        for (auto& tag : pool.provenance) tag = Provenance::OutOfDistribution;
    }

    PreparedData out;
    LabeledDataset train_id;
    std::tie(train_id, out.test) = train_test_split(id, config.data.test_fraction, run_stream(seed, kSplit));
    MixtureSpec spec = mixture;
    spec.seed = run_stream(seed, kMix);
    out.train = mix(train_id, pool, spec);
    if (config.data.standardize) standardize(out);
    return out;
}

RunOutput run_single(const ExperimentConfig& config, const LossMethod& method, const MixtureSpec& mixture,
                     std::uint64_t seed) {
    PreparedData data = prepare_data(config, mixture, seed);
    TrainConfig tc = config.train;
    tc.method = method;
    tc.seed = run_stream(seed, kTrain);
    RunOutput out;
    out.record = train(tc, data.train);
    out.metrics = evaluate(out.record.params, data.test);
    out.row.method = to_string(method);
    out.row.alpha = mixture.alpha;
    out.row.labeling = to_string(mixture.labeling);
    out.row.seed = seed;
    out.row.accuracy = out.metrics.accuracy;
    out.row.ece = out.metrics.ece;
    const auto& last = out.record.epochs.back();
    out.row.confidence_gap = last.mean_confidence_id - last.mean_confidence_ood;
    out.row.wall_clock_seconds = out.record.wall_clock_seconds;
    return out;
}

std::vector<RunOutput> run_parallel(std::size_t n, std::size_t threads,
                                    const std::function<RunOutput(std::size_t)>& job) {
    std::vector<RunOutput> results(n);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = job(i);
        return results;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            std::size_t i = 0;
            {
                std::lock_guard lock(mu);
                if (next >= n || failure) return;
                i = next++;
            }
            try {
                results[i] = job(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) {
        s.mean = std::numeric_limits<double>::quiet_NaN();
        s.sd = s.mean;
        return s;
    }
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

}  // namespace graylearn
