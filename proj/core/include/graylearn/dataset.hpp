#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graylearn/matrix.hpp"

namespace graylearn {

enum class Provenance : std::uint8_t { InDistribution, OutOfDistribution };

/// Features, zero-based labels in {0..K-1}, and an ID/OOD tag per sample.
struct LabeledDataset {
    Matrix features;
    std::vector<std::size_t> labels;
    std::vector<Provenance> provenance;
    std::size_t num_classes = 0;
    /// For OOD samples: the class they had in their source pool.
    std::vector<std::optional<std::size_t>> source_class;

    std::size_t size() const { return labels.size(); }
    std::size_t num_features() const { return features.cols(); }

    /// Throws UsageError if any invariant is broken.
    void validate() const;

    std::size_t count(Provenance tag) const;
    std::vector<std::size_t> class_counts() const;

    /// Rows `indices`, in the given order.
    LabeledDataset subset(std::span<const std::size_t> indices) const;

    void push_back(std::span<const double> x, std::size_t label, Provenance tag,
                   std::optional<std::size_t> source = std::nullopt);

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

enum class OodLabeling { Specific, Random };

std::string to_string(OodLabeling labeling);
OodLabeling parse_ood_labeling(const std::string& text);

/// How OOD samples are mixed into an in-distribution set.
struct MixtureSpec {
    double alpha = 0.1;
    OodLabeling labeling = OodLabeling::Specific;
    /// Use only this class-balanced partition of the OOD pool.
    std::optional<std::size_t> ood_subset;
    std::size_t ood_subset_count = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Replace round(alpha * N) uniformly chosen ID samples by OOD samples drawn
/// without replacement from the pool, relabelled per `spec.labeling`:
/// Specific maps source class s to s mod K; Random draws a label uniformly.
LabeledDataset mix(const LabeledDataset& id_data, const LabeledDataset& ood_pool, const MixtureSpec& spec);

/// Number of OOD samples mix() inserts into a set of size n.
std::size_t ood_count(double alpha, std::size_t n);

/// Class-balanced partition by class order: subset s holds classes
/// [s*C/n, (s+1)*C/n). Labels keep their pool values.
std::vector<LabeledDataset> split_ood_source(const LabeledDataset& pool, std::size_t n_subsets);

/// Smallest class (ties: lowest index) becomes the OOD pool; the rest is
/// re-encoded densely to {0..K-2} preserving class order.
std::pair<LabeledDataset, LabeledDataset> make_smallest_class_ood(const LabeledDataset& data);

struct BlobSpec {
    std::size_t n_per_class = 50;
    std::size_t num_classes = 3;
    std::size_t num_features = 2;
    double centers_scale = 5.0;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
};

/// Isotropic Gaussian blobs; class centres are random unit directions times
/// `centers_scale`. Samples are ordered class by class.
LabeledDataset gen_blobs(const BlobSpec& spec);

/// The class centres gen_blobs uses for `spec` (one row per class).
Matrix blob_centers(const BlobSpec& spec);

/// Stratified split of the ID samples; every OOD sample goes to train. Both
/// outputs keep the source order.
std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data, double test_fraction,
                                                          std::uint64_t seed);

/// CSV ingest: numeric feature columns plus one label column (name, zero-based
/// index, or "last"). Integer labels are encoded densely in numeric order,
/// other labels by first appearance. A header column named "dist" with values
/// id/ood is read back as provenance. Lines starting with '#' are skipped.
LabeledDataset load_csv(const std::string& path, const std::string& label_column, bool has_header);

/// Columns x0..x{F-1}, label, dist, after an optional "# comment" line.
/// Values are written in shortest round-trip form.
void save_csv(const LabeledDataset& data, const std::string& path, const std::string& comment = {});

}  // namespace graylearn
