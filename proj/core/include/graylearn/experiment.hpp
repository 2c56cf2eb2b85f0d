#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "graylearn/config.hpp"
#include "graylearn/dataset.hpp"
#include "graylearn/metrics.hpp"
#include "graylearn/train.hpp"

namespace graylearn {

enum class DataSourceKind { Blobs, Csv };
enum class OodSourceKind { None, Blobs, SmallestClass, Csv };

struct CsvSource {
    std::string path;
    std::string label_column = "last";
    bool has_header = true;
};

struct DataSourceSpec {
    DataSourceKind kind = DataSourceKind::Blobs;
    BlobSpec blobs;  // seed is replaced per run
    CsvSource csv;
    bool standardize = false;
    double test_fraction = 0.3;
};

struct OodSourceSpec {
    OodSourceKind kind = OodSourceKind::Blobs;
    /// Extra blob classes generated alongside the ID classes.
    std::size_t blob_classes = 10;
    std::size_t blob_n_per_class = 100;
    CsvSource csv;
};

/// Everything a CLI experiment needs, parsed from a config file.
struct ExperimentConfig {
    DataSourceSpec data;
    OodSourceSpec ood;
    MixtureSpec mixture;  // seed is replaced per run
    TrainConfig train;    // seed is replaced per run
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> alphas;
    std::string output_dir = "out";
    std::string config_hash;

    void validate() const;
};

/// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const ConfigFile& file);

/// The contaminated training set and the clean test set of one run.
struct PreparedData {
    LabeledDataset train;
    LabeledDataset test;
};

/// Builds the data of one run. All randomness derives from `seed`; the method
/// never enters, so every method sees the identical contamination.
PreparedData prepare_data(const ExperimentConfig& config, const MixtureSpec& mixture, std::uint64_t seed);

/// One (method, alpha, labeling, seed) cell.
struct ResultRow {
    std::string method;
    double alpha = 0.0;
    std::string labeling;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double ece = 0.0;
    /// NaN when the training set had no OOD samples.
    double confidence_gap = 0.0;
    double wall_clock_seconds = 0.0;
};

struct RunOutput {
    ResultRow row;
    TrainRecord record;
    MetricsReport metrics;
};

RunOutput run_single(const ExperimentConfig& config, const LossMethod& method, const MixtureSpec& mixture,
                     std::uint64_t seed);

/// Runs jobs 0..n-1 on up to `threads` workers; results come back in job order.
std::vector<RunOutput> run_parallel(std::size_t n, std::size_t threads,
                                    const std::function<RunOutput(std::size_t)>& job);

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    /// Sample standard deviation; 0 for a single value.
    double sd = 0.0;
};

Summary summarize(const std::vector<double>& values);

/// Seed streams used inside one run.
std::uint64_t run_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace graylearn
