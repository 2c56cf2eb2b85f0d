#include "graylearn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

#include "graylearn/csv.hpp"
#include "graylearn/errors.hpp"
#include "graylearn/rng.hpp"

namespace graylearn {

void LabeledDataset::validate() const {
    if (num_classes < 2) throw UsageError("dataset: need at least two classes");
    const std::size_t n = labels.size();
    if (features.rows() != n) throw UsageError("dataset: feature rows do not match label count");
    if (provenance.size() != n) throw UsageError("dataset: provenance length does not match label count");
    if (source_class.size() != n) throw UsageError("dataset: source-class length does not match label count");
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= num_classes) {
            throw UsageError("dataset: label " + std::to_string(labels[i]) + " of sample " +
                             std::to_string(i) + " out of range");
        }
    }
    if (!features.all_finite()) throw UsageError("dataset: non-finite feature value");
}

std::size_t LabeledDataset::count(Provenance tag) const {
    return static_cast<std::size_t>(std::count(provenance.begin(), provenance.end(), tag));
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t y : labels) ++counts.at(y);
    return counts;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.num_classes = num_classes;
    out.features = Matrix(0, features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= size()) throw IndexError("subset: index " + std::to_string(idx) + " out of range");
        out.push_back(features.row(idx), labels[idx], provenance[idx], source_class[idx]);
    }
    return out;
}

void LabeledDataset::push_back(std::span<const double> x, std::size_t label, Provenance tag,
                               std::optional<std::size_t> source) {
    features.append_row(x);
    labels.push_back(label);
    provenance.push_back(tag);
    source_class.push_back(source);
}

std::string to_string(OodLabeling labeling) {
    return labeling == OodLabeling::Specific ? "specific" : "random";
}

OodLabeling parse_ood_labeling(const std::string& text) {
    if (text == "specific") return OodLabeling::Specific;
    if (text == "random") return OodLabeling::Random;
    throw UsageError("unknown OOD labeling '" + text + "' (expected specific or random)");
}

void MixtureSpec::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("mixture: alpha must lie in [0, 1]");
    if (ood_subset && ood_subset_count == 0) throw UsageError("mixture: subset count must be positive");
    if (ood_subset && *ood_subset >= ood_subset_count) {
        throw UsageError("mixture: subset index " + std::to_string(*ood_subset) + " >= subset count " +
                         std::to_string(ood_subset_count));
    }
}

std::size_t ood_count(double alpha, std::size_t n) {
    return static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n)));
}

LabeledDataset mix(const LabeledDataset& id_data, const LabeledDataset& ood_pool, const MixtureSpec& spec) {
    spec.validate();
    id_data.validate();
    const std::size_t n = id_data.size();
    const std::size_t n_ood = ood_count(spec.alpha, n);
    LabeledDataset out = id_data;
    if (n_ood == 0) return out;

    ood_pool.validate();
    if (ood_pool.num_features() != id_data.num_features()) {
        throw ShapeError("mix: OOD pool has " + std::to_string(ood_pool.num_features()) +
                         " features, ID data has " + std::to_string(id_data.num_features()));
    }
    const LabeledDataset* pool = &ood_pool;
    LabeledDataset filtered;
    if (spec.ood_subset) {
        filtered = split_ood_source(ood_pool, spec.ood_subset_count).at(*spec.ood_subset);
        pool = &filtered;
    }
    if (pool->size() < n_ood) {
        throw CapacityError("mix: need " + std::to_string(n_ood) + " OOD samples, pool holds " +
                            std::to_string(pool->size()));
    }

    Rng rng(spec.seed);
    std::vector<std::size_t> positions = rng.sample_without_replacement(n, n_ood);
    std::sort(positions.begin(), positions.end());
    const std::vector<std::size_t> draws = rng.sample_without_replacement(pool->size(), n_ood);

    const std::size_t k = id_data.num_classes;
    for (std::size_t i = 0; i < n_ood; ++i) {
        const std::size_t pos = positions[i];
        const std::size_t src = draws[i];
        const std::size_t source_class = pool->labels[src];
        std::copy(pool->features.row(src).begin(), pool->features.row(src).end(), out.features.row(pos).begin());
        out.labels[pos] = spec.labeling == OodLabeling::Specific ? source_class % k : rng.below(k);
        out.provenance[pos] = Provenance::OutOfDistribution;
        out.source_class[pos] = source_class;
    }
    return out;
}

std::vector<LabeledDataset> split_ood_source(const LabeledDataset& pool, std::size_t n_subsets) {
    if (n_subsets == 0) throw UsageError("split_ood_source: need at least one subset");
    const std::size_t classes = pool.num_classes;
    if (classes % n_subsets != 0) {
        throw UsageError("split_ood_source: " + std::to_string(classes) + " classes cannot be split into " +
                         std::to_string(n_subsets) + " balanced subsets");
    }
    const std::size_t per_subset = classes / n_subsets;
    std::vector<std::vector<std::size_t>> members(n_subsets);
    for (std::size_t i = 0; i < pool.size(); ++i) members[pool.labels[i] / per_subset].push_back(i);
    std::vector<LabeledDataset> out;
    out.reserve(n_subsets);
    for (const auto& idx : members) out.push_back(pool.subset(idx));
    return out;
}

std::pair<LabeledDataset, LabeledDataset> make_smallest_class_ood(const LabeledDataset& data) {
    if (data.num_classes < 3) {
        throw UsageError("make_smallest_class_ood: need K >= 3 so two ID classes remain");
    }
    const auto counts = data.class_counts();
    const auto smallest =
        static_cast<std::size_t>(std::min_element(counts.begin(), counts.end()) - counts.begin());
    if (counts[smallest] == 0) {
        throw UsageError("make_smallest_class_ood: class " + std::to_string(smallest) + " has no samples");
    }

    LabeledDataset id_part;
    id_part.num_classes = data.num_classes - 1;
    id_part.features = Matrix(0, data.num_features());
    LabeledDataset ood_part;
    ood_part.num_classes = data.num_classes;
    ood_part.features = Matrix(0, data.num_features());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t y = data.labels[i];
        if (y == smallest) {
            ood_part.push_back(data.features.row(i), y, Provenance::OutOfDistribution, y);
        } else {
            id_part.push_back(data.features.row(i), y < smallest ? y : y - 1, data.provenance[i],
                              data.source_class[i]);
        }
    }
    return {std::move(id_part), std::move(ood_part)};
}

Matrix blob_centers(const BlobSpec& spec) {
    Rng rng(spec.seed);
    Matrix centers(spec.num_classes, spec.num_features);
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
        auto row = centers.row(k);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : row) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
        } while (norm == 0.0);
        for (double& v : row) v *= spec.centers_scale / norm;
    }
    return centers;
}

LabeledDataset gen_blobs(const BlobSpec& spec) {
    if (spec.n_per_class == 0 || spec.num_classes < 2 || spec.num_features == 0 ||
        !(spec.centers_scale > 0.0) || !(spec.noise_sd >= 0.0)) {
        throw UsageError("gen_blobs: n_per_class, num_features, centers_scale must be positive, K >= 2, noise_sd >= 0");
    }
    const Matrix centers = blob_centers(spec);
    // Points use a stream separate from the centres so that the centres do not
    // depend on n_per_class.
    Rng rng(derive_seed(spec.seed, 1));
    LabeledDataset data;
    data.num_classes = spec.num_classes;
    data.features = Matrix(0, spec.num_features);
    std::vector<double> x(spec.num_features);
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
        for (std::size_t i = 0; i < spec.n_per_class; ++i) {
            for (std::size_t f = 0; f < spec.num_features; ++f) {
                x[f] = centers(k, f) + spec.noise_sd * rng.normal();
            }
            data.push_back(x, k, Provenance::InDistribution);
        }
    }
    return data;
}

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data, double test_fraction,
                                                          std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw UsageError("train_test_split: test fraction must lie in (0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class(data.num_classes);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.provenance[i] == Provenance::InDistribution) by_class[data.labels[i]].push_back(i);
    }
    Rng rng(seed);
    std::vector<bool> in_test(data.size(), false);
    for (std::size_t k = 0; k < data.num_classes; ++k) {
        auto& members = by_class[k];
        if (members.empty()) continue;
        rng.shuffle(std::span<std::size_t>(members));
        const std::size_t n_test = ood_count(test_fraction, members.size());
        if (n_test >= members.size()) {
            throw StratificationError("train_test_split: class " + std::to_string(k) + " with " +
                                      std::to_string(members.size()) + " ID samples would be empty in train");
        }
        for (std::size_t j = 0; j < n_test; ++j) in_test[members[j]] = true;
    }
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < data.size(); ++i) (in_test[i] ? test_idx : train_idx).push_back(i);
    return {data.subset(train_idx), data.subset(test_idx)};
}

namespace {

// Integer labels keep their numeric order; anything else is encoded by first
// appearance.
std::vector<std::size_t> encode_labels(const std::vector<std::string>& raw) {
    std::vector<long long> numeric;
    numeric.reserve(raw.size());
    for (const auto& text : raw) {
        long long v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            numeric.clear();
            break;
        }
        numeric.push_back(v);
    }
    std::vector<std::size_t> codes(raw.size());
    if (!numeric.empty()) {
        std::vector<long long> distinct = numeric;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            codes[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), numeric[i]) -
                                                distinct.begin());
        }
        return codes;
    }
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < raw.size(); ++i) codes[i] = seen.try_emplace(raw[i], seen.size()).first->second;
    return codes;
}

}  // namespace

LabeledDataset load_csv(const std::string& path, const std::string& label_column, bool has_header) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::size_t width = 0;
    std::optional<std::size_t> label_idx;
    std::optional<std::size_t> dist_idx;

    auto resolve_columns = [&](std::size_t columns) {
        width = columns;
        if (has_header) {
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (header[c] == label_column) label_idx = c;
                if (header[c] == "dist") dist_idx = c;
            }
        }
        if (!label_idx) {
            if (label_column == "last") {
                label_idx = columns - 1;
            } else {
                std::size_t idx = 0;
                auto [ptr, ec] =
                    std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
                if (ec == std::errc{} && ptr == label_column.data() + label_column.size() && idx < columns) {
                    label_idx = idx;
                }
            }
        }
        if (!label_idx) throw ParseError(path + ": unknown label column '" + label_column + "'");
        if (dist_idx == label_idx) dist_idx.reset();
    };

    LabeledDataset data;
    std::vector<std::string> raw_labels;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        const auto stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        auto fields = split_csv_line(line);
        if (has_header && header.empty()) {
            header = std::move(fields);
            resolve_columns(header.size());
            continue;
        }
        if (width == 0) resolve_columns(fields.size());
        if (fields.size() != width) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                             " fields, found " + std::to_string(fields.size()));
        }
        row.clear();
        Provenance tag = Provenance::InDistribution;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == *label_idx) continue;
            if (dist_idx && c == *dist_idx) {
                if (fields[c] == "id") {
                    tag = Provenance::InDistribution;
                } else if (fields[c] == "ood") {
                    tag = Provenance::OutOfDistribution;
                } else {
                    throw ParseError(path + ":" + std::to_string(line_no) + ": dist must be id or ood, found '" +
                                     fields[c] + "'");
                }
                continue;
            }
            auto value = parse_double(fields[c]);
            if (!value || !std::isfinite(*value)) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": column " + std::to_string(c) +
                                 " is not a finite number: '" + fields[c] + "'");
            }
            row.push_back(*value);
        }
        raw_labels.push_back(std::string(trim(fields[*label_idx])));
        data.push_back(row, 0, tag);
    }
    if (data.size() == 0) throw ParseError(path + ": no data rows");
    data.labels = encode_labels(raw_labels);
    data.num_classes = 1 + *std::max_element(data.labels.begin(), data.labels.end());
    if (data.num_classes < 2) throw ParseError(path + ": need at least two distinct labels");
    return data;
}

void save_csv(const LabeledDataset& data, const std::string& path, const std::string& comment) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    for (std::size_t f = 0; f < data.num_features(); ++f) out += "x" + std::to_string(f) + ",";
    out += "label,dist\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.features.row(i)) {
            out += format_double(v);
            out += ',';
        }
        out += std::to_string(data.labels[i]);
        out += data.provenance[i] == Provenance::InDistribution ? ",id\n" : ",ood\n";
    }
    write_file_atomic(path, out);
}

}  // namespace graylearn
