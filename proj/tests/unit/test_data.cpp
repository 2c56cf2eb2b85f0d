#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "graylearn/dataset.hpp"
#include "graylearn/errors.hpp"
#include "graylearn/rng.hpp"

using namespace graylearn;

namespace {

LabeledDataset sized_classes(const std::vector<std::size_t>& sizes, std::uint64_t seed = 1) {
    Rng rng(seed);
    LabeledDataset d;
    d.num_classes = sizes.size();
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        for (std::size_t i = 0; i < sizes[k]; ++i) {
            const std::vector<double> x{static_cast<double>(k), rng.normal()};
            d.push_back(x, k, Provenance::InDistribution);
        }
    }
    return d;
}

// Feature 0 of every row carries a unique id so rows can be tracked through mix().
LabeledDataset tagged(std::size_t n, std::size_t k, double offset) {
    LabeledDataset d;
    d.num_classes = k;
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> x{offset + static_cast<double>(i)};
        d.push_back(x, i % k, Provenance::InDistribution);
    }
    return d;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("graylearn_test_" + name)).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("ood count rounding") {
    CHECK(ood_count(0.1, 100) == 10);
    CHECK(ood_count(0.0, 100) == 0);
    CHECK(ood_count(0.5, 7) == 4);
    CHECK(ood_count(0.1, 15) == 2);
    CHECK(ood_count(1.0, 9) == 9);
}

TEST_CASE("mix replaces round(alpha N) samples") {
    const auto id = tagged(100, 4, 0.0);
    const auto pool = tagged(50, 5, 1000.0);
    MixtureSpec spec;
    spec.alpha = 0.0;
    CHECK(mix(id, pool, spec) == id);

    spec.alpha = 0.1;
    const auto mixed = mix(id, pool, spec);
    CHECK(mixed.size() == 100);
    CHECK(mixed.count(Provenance::OutOfDistribution) == 10);
    CHECK(mixed.count(Provenance::InDistribution) == 90);
    CHECK(mixed.num_classes == 4);
    std::set<double> ood_ids;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        const double tag = mixed.features(i, 0);
        if (mixed.provenance[i] == Provenance::OutOfDistribution) {
            CHECK(tag >= 1000.0);
            ood_ids.insert(tag);
            const auto source = static_cast<std::size_t>(tag - 1000.0) % 5;
            CHECK(mixed.source_class[i] == source);
            CHECK(mixed.labels[i] == source % 4);
        } else {
            CHECK(tag == static_cast<double>(i));
            CHECK(mixed.labels[i] == id.labels[i]);
        }
    }
    CHECK(ood_ids.size() == 10);

    spec.alpha = 0.5;
    CHECK(mix(id, pool, spec).count(Provenance::OutOfDistribution) == 50);
    spec.alpha = 0.6;
    CHECK_THROWS_AS(mix(id, pool, spec), CapacityError);
}

TEST_CASE("mix is deterministic in the seed") {
    const auto id = tagged(60, 3, 0.0);
    const auto pool = tagged(40, 4, 1000.0);
    MixtureSpec spec;
    spec.alpha = 0.25;
    spec.labeling = OodLabeling::Random;
    spec.seed = 5;
    CHECK(mix(id, pool, spec) == mix(id, pool, spec));
    auto other = spec;
    other.seed = 6;
    CHECK_FALSE(mix(id, pool, spec) == mix(id, pool, other));
}

TEST_CASE("specific labels are constant per source class") {
    const auto id = tagged(400, 10, 0.0);
    const auto pool = tagged(300, 30, 1000.0);
    MixtureSpec spec;
    spec.alpha = 0.5;
    spec.seed = 3;
    const auto mixed = mix(id, pool, spec);
    std::map<std::size_t, std::set<std::size_t>> labels_by_source;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        if (mixed.provenance[i] == Provenance::OutOfDistribution) {
            labels_by_source[*mixed.source_class[i]].insert(mixed.labels[i]);
        }
    }
    CHECK(labels_by_source.size() == 30);
    for (const auto& [source, labels] : labels_by_source) {
        CHECK(labels.size() == 1);
        CHECK(*labels.begin() == source % 10);
    }
}

TEST_CASE("random labels are uniform (chi-square)") {
    const auto id = tagged(10000, 10, 0.0);
    const auto pool = tagged(10000, 7, 100000.0);
    MixtureSpec spec;
    spec.alpha = 1.0;
    spec.labeling = OodLabeling::Random;
    spec.seed = 2024;
    const auto mixed = mix(id, pool, spec);
    std::vector<double> counts(10, 0.0);
    for (auto y : mixed.labels) counts[y] += 1.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    const double p = boost::math::gamma_q(4.5, chi2 / 2.0);
    CAPTURE(chi2);
    CHECK(p > 0.01);
}

TEST_CASE("mixture spec validation") {
    MixtureSpec spec;
    spec.alpha = 1.5;
    CHECK_THROWS_AS(spec.validate(), UsageError);
    spec.alpha = 0.1;
    spec.ood_subset = 10;
    spec.ood_subset_count = 10;
    CHECK_THROWS_AS(spec.validate(), UsageError);
}

TEST_CASE("split ood source") {
    LabeledDataset pool;
    pool.num_classes = 100;
    for (std::size_t k = 0; k < 100; ++k) {
        for (int i = 0; i < 3; ++i) pool.push_back(std::vector<double>{static_cast<double>(k * 3 + i)}, k, Provenance::InDistribution);
    }
    const auto parts = split_ood_source(pool, 10);
    CHECK(parts.size() == 10);
    std::set<double> seen;
    std::size_t total = 0;
    for (std::size_t s = 0; s < parts.size(); ++s) {
        std::set<std::size_t> classes(parts[s].labels.begin(), parts[s].labels.end());
        CHECK(classes.size() == 10);
        CHECK(*classes.begin() == s * 10);
        for (std::size_t i = 0; i < parts[s].size(); ++i) seen.insert(parts[s].features(i, 0));
        total += parts[s].size();
    }
    CHECK(total == pool.size());
    CHECK(seen.size() == pool.size());

    const auto whole = split_ood_source(pool, 1);
    CHECK(whole.size() == 1);
    CHECK(whole[0] == pool);
    CHECK_THROWS_AS(split_ood_source(pool, 7), UsageError);
}

TEST_CASE("split ood source on random pools is a partition") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n_sub = 1 + rng.below(5);
        const std::size_t classes = n_sub * (1 + rng.below(4));
        LabeledDataset pool;
        pool.num_classes = classes;
        const std::size_t n = classes + rng.below(100);
        for (std::size_t i = 0; i < n; ++i) {
            pool.push_back(std::vector<double>{static_cast<double>(i)}, i < classes ? i : rng.below(classes),
                           Provenance::InDistribution);
        }
        std::vector<int> hits(n, 0);
        for (const auto& part : split_ood_source(pool, n_sub)) {
            for (std::size_t i = 0; i < part.size(); ++i) ++hits[static_cast<std::size_t>(part.features(i, 0))];
        }
        for (int h : hits) CHECK(h == 1);
    }
}

TEST_CASE("smallest class becomes ood") {
    const auto data = sized_classes({50, 50, 10});
    const auto [id, ood] = make_smallest_class_ood(data);
    CHECK(ood.size() == 10);
    CHECK(id.size() == 100);
    CHECK(id.num_classes == 2);
    for (std::size_t i = 0; i < ood.size(); ++i) CHECK(ood.features(i, 0) == 2.0);

    const auto tie = sized_classes({10, 10, 30});
    const auto [tid, tood] = make_smallest_class_ood(tie);
    for (std::size_t i = 0; i < tood.size(); ++i) CHECK(tood.features(i, 0) == 0.0);

    // Re-encoding: every remaining original class maps to exactly one new label.
    const auto data4 = sized_classes({20, 5, 20, 20});
    const auto [id4, ood4] = make_smallest_class_ood(data4);
    std::map<double, std::set<std::size_t>> forward;
    std::map<std::size_t, std::set<double>> backward;
    for (std::size_t i = 0; i < id4.size(); ++i) {
        forward[id4.features(i, 0)].insert(id4.labels[i]);
        backward[id4.labels[i]].insert(id4.features(i, 0));
    }
    CHECK(forward.size() == 3);
    CHECK(backward.size() == 3);
    for (const auto& [k, v] : forward) CHECK(v.size() == 1);
    for (const auto& [k, v] : backward) CHECK(v.size() == 1);
    CHECK(*forward[0.0].begin() == 0);
    CHECK(*forward[2.0].begin() == 1);
    CHECK(*forward[3.0].begin() == 2);

    CHECK_THROWS_AS(make_smallest_class_ood(sized_classes({5, 6})), UsageError);
}

TEST_CASE("gaussian blobs") {
    BlobSpec spec;
    spec.n_per_class = 20;
    spec.num_classes = 4;
    spec.num_features = 3;
    spec.noise_sd = 0.0;
    spec.seed = 9;
    const auto flat = gen_blobs(spec);
    CHECK(flat.size() == 80);
    const Matrix centers = blob_centers(spec);
    for (std::size_t i = 0; i < flat.size(); ++i) {
        for (std::size_t f = 0; f < 3; ++f) CHECK(flat.features(i, f) == centers(flat.labels[i], f));
    }
    CHECK(gen_blobs(spec) == flat);
}

TEST_CASE("well separated blobs are solved by nearest centroid") {
    BlobSpec spec;
    spec.n_per_class = 100;
    spec.num_classes = 5;
    spec.num_features = 8;
    spec.centers_scale = 20.0;
    spec.noise_sd = 1.0;
    spec.seed = 4;
    const auto data = gen_blobs(spec);
    std::vector<std::vector<double>> mean(5, std::vector<double>(8, 0.0));
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t f = 0; f < 8; ++f) mean[data.labels[i]][f] += data.features(i, f) / 100.0;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::size_t best = 0;
        double best_d = INFINITY;
        for (std::size_t k = 0; k < 5; ++k) {
            double d = 0.0;
            for (std::size_t f = 0; f < 8; ++f) d += std::pow(data.features(i, f) - mean[k][f], 2);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        correct += best == data.labels[i];
    }
    CHECK(correct == data.size());
}

TEST_CASE("train test split") {
    const auto data = sized_classes({40, 41, 30});
    const auto [train, test] = train_test_split(data, 0.5, 3);
    const auto tr = train.class_counts();
    const auto te = test.class_counts();
    const std::vector<std::size_t> sizes{40, 41, 30};
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(tr[k] + te[k] == sizes[k]);
        CHECK(std::abs(static_cast<long>(tr[k]) - static_cast<long>(te[k])) <= 1);
    }
    const auto again = train_test_split(data, 0.5, 3);
    CHECK(again.first == train);
    CHECK(again.second == test);

    auto contaminated = data;
    for (int i = 0; i < 15; ++i) {
        contaminated.push_back(std::vector<double>{9.0, 9.0}, 1, Provenance::OutOfDistribution, 0);
    }
    const auto [ctrain, ctest] = train_test_split(contaminated, 0.3, 1);
    CHECK(ctest.count(Provenance::OutOfDistribution) == 0);
    CHECK(ctrain.count(Provenance::OutOfDistribution) == 15);

    CHECK_THROWS_AS(train_test_split(sized_classes({1, 10}), 0.5, 1), StratificationError);
}

TEST_CASE("csv ingest") {
    const auto path = temp_path("abc.csv");
    write_text(path, "f1,f2,cls\n1.5,2,a\n3,4,b\n-1e3,0.25,a\n");
    const auto d = load_csv(path, "cls", true);
    CHECK(d.size() == 3);
    CHECK(d.num_classes == 2);
    CHECK(d.labels == std::vector<std::size_t>{0, 1, 0});
    CHECK(d.features(2, 0) == -1000.0);

    write_text(path, "");
    CHECK_THROWS_AS(load_csv(path, "last", false), ParseError);

    write_text(path, "a,b,c\n1,2,x\n1,y\n");
    try {
        load_csv(path, "c", true);
        FAIL("ragged row accepted");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    write_text(path, "a,b,c\n1,2,x\n1,zz,y\n");
    CHECK_THROWS_AS(load_csv(path, "c", true), ParseError);
    write_text(path, "a,b,c\n1,2,x\n1,3,y\n");
    CHECK_THROWS_AS(load_csv(path, "label", true), ParseError);
    CHECK(load_csv(path, "2", true).num_classes == 2);
    CHECK_THROWS_AS(load_csv(temp_path("missing.csv"), "last", true), ParseError);
}

TEST_CASE("integer labels keep numeric order") {
    const auto path = temp_path("ints.csv");
    write_text(path, "# comment line\nx,label\n0.5,2\n0.1,0\n0.2,1\n");
    const auto d = load_csv(path, "label", true);
    CHECK(d.labels == std::vector<std::size_t>{2, 0, 1});
}

TEST_CASE("csv round trip is exact") {
    Rng rng(8);
    LabeledDataset d;
    d.num_classes = 3;
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> x{rng.normal() * 1e-9, rng.normal() * 1e12, rng.uniform(), -rng.uniform() / 3.0};
        d.push_back(x, static_cast<std::size_t>(i % 3),
                    i % 7 == 0 ? Provenance::OutOfDistribution : Provenance::InDistribution);
    }
    const auto path = temp_path("roundtrip.csv");
    save_csv(d, path, "note");
    const auto back = load_csv(path, "label", true);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    CHECK(back.provenance == d.provenance);
}

}
