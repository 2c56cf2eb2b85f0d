#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "doctest.h"
#include "graylearn/bounds.hpp"
#include "graylearn/errors.hpp"
#include "graylearn/rng.hpp"

using namespace graylearn;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

big big_coef(const BoundInputs& in) {
    const big a = in.alpha;
    const big ni = static_cast<double>(in.n_in);
    const big no = static_cast<double>(in.n_out);
    return (a * sqrt(ni) + (1 - a) * sqrt(no)) / sqrt(ni * no);
}

big big_depth_factor(std::size_t d) { return sqrt(2 * big(static_cast<double>(d)) * log(big(2))) + 1; }

big big_prod(const std::vector<double>& m) {
    big p = 1;
    for (double v : m) p *= big(v);
    return p;
}

big big_sampling(const BoundInputs& in) {
    return 8 * big(in.loss_bound) * big_coef(in) * sqrt(2 * log(16 / big(in.delta)));
}

big big_standard(const BoundInputs& in) {
    return 2 * big(in.alpha) * big(in.discrepancy) +
           4 * big(in.input_bound) * big(in.lipschitz) * big_coef(in) * big_depth_factor(in.depth) *
               big_prod(in.layer_norms) +
           big_sampling(in);
}

big big_gl(const BoundInputs& in) {
    return 2 * big(in.alpha) * big(in.discrepancy) +
           4 * big(in.input_bound) * big(in.lipschitz) * big(static_cast<double>(in.num_classes)) * big_coef(in) *
               (big(in.loss_bound) + log(2 * big(in.lambda) - 2)) +
           big_sampling(in);
}

BoundInputs reference_instance() {
    BoundInputs in;
    in.input_bound = 1;
    in.lipschitz = 1;
    in.loss_bound = 1;
    in.depth = 2;
    in.layer_norms = {1, 1};
    in.delta = 0.05;
    in.alpha = 0.1;
    in.n_in = 900;
    in.n_out = 100;
    in.discrepancy = 0.2;
    in.num_classes = 10;
    in.lambda = 1.5;
    return in;
}

BoundInputs random_inputs(Rng& rng) {
    BoundInputs in;
    in.alpha = rng.uniform();
    in.n_in = 1 + rng.below(100000);
    in.n_out = 1 + rng.below(100000);
    in.input_bound = 0.1 + 10 * rng.uniform();
    in.lipschitz = 0.1 + 10 * rng.uniform();
    in.loss_bound = 0.1 + 10 * rng.uniform();
    in.depth = 1 + rng.below(5);
    in.layer_norms.resize(in.depth);
    for (auto& m : in.layer_norms) m = 0.1 + 3 * rng.uniform();
    in.num_classes = 2 + rng.below(99);
    in.lse_bound = 10 * rng.uniform();
    in.delta = 0.001 + 0.998 * rng.uniform();
    in.discrepancy = 2 * rng.uniform();
    in.lambda = 1.0 + 1e-6 + 5 * rng.uniform();
    return in;
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("coef") {
    CHECK(coef(0.5, 100, 100) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(coef(0.0, 4, 1) == 0.5);
    Rng rng(1);
    for (int t = 0; t < 1000; ++t) {
        const auto in = random_inputs(rng);
        CHECK(std::abs(coef(in.alpha, in.n_in, in.n_out) - big_coef(in).convert_to<double>()) <=
              1e-14 * big_coef(in).convert_to<double>());
    }
}

TEST_CASE("reference instance against the high-precision oracle") {
    auto in = reference_instance();
    CHECK(std::abs(bound_standard(in) - 1.5533177193548524264) < 1e-12);
    CHECK(std::abs(bound_standard(in) - big_standard(in).convert_to<double>()) < 1e-12);
    CHECK(std::abs(bound_gl(in) - 2.7269002437843891444) < 1e-12);
    CHECK(std::abs(bound_gl(in) - big_gl(in).convert_to<double>()) < 1e-12);
    in.lambda = 2.0;
    CHECK(std::abs(bound_gl(in) - 3.8359357326803016395) < 1e-12);
}

TEST_CASE("random instances against the high-precision oracle") {
    Rng rng(2);
    for (int t = 0; t < 1000; ++t) {
        const auto in = random_inputs(rng);
        const double s = big_standard(in).convert_to<double>();
        const double g = big_gl(in).convert_to<double>();
        CHECK(std::abs(bound_standard(in) - s) <= 1e-13 * std::abs(s));
        CHECK(std::abs(bound_gl(in) - g) <= 1e-12 * std::max(1.0, std::abs(g)));
    }
}

TEST_CASE("bound structure") {
    auto in = reference_instance();
    in.alpha = 0.0;
    CHECK(bound_standard_terms(in).discrepancy == 0.0);
    CHECK(bound_gl_terms(in).discrepancy == 0.0);

    in = reference_instance();
    const double before = bound_standard(in);
    in.discrepancy *= 2;
    CHECK(bound_standard(in) - before == doctest::Approx(2 * 0.1 * 0.2).epsilon(1e-12));

    in = reference_instance();
    const auto terms = bound_gl_terms(in);
    CHECK(terms.complexity == doctest::Approx(4.0 * 10 * coef(0.1, 900, 100) * 1.0).epsilon(1e-15));
    CHECK(terms.total() == bound_gl(in));

    double last = -INFINITY;
    for (double lambda : {1.01, 1.2, 1.5, 2.0, 5.0, 50.0}) {
        in.lambda = lambda;
        const double b = bound_gl(in);
        CHECK(b > last);
        last = b;
    }
    in.lambda = 1.0;
    CHECK_THROWS_AS(bound_gl(in), UsageError);
}

TEST_CASE("input validation") {
    auto bad = [](auto mutate) {
        auto in = reference_instance();
        mutate(in);
        return in;
    };
    CHECK_THROWS_AS(bound_standard(bad([](BoundInputs& i) { i.alpha = 1.5; })), UsageError);
    CHECK_THROWS_AS(bound_standard(bad([](BoundInputs& i) { i.n_in = 0; })), UsageError);
    CHECK_THROWS_AS(bound_standard(bad([](BoundInputs& i) { i.layer_norms = {1}; })), UsageError);
    CHECK_THROWS_AS(bound_standard(bad([](BoundInputs& i) { i.delta = 1.0; })), UsageError);
    CHECK_THROWS_AS(bound_standard(bad([](BoundInputs& i) { i.num_classes = 1; })), UsageError);
    CHECK_THROWS_AS(bound_standard(bad([](BoundInputs& i) { i.input_bound = -1; })), UsageError);
}

TEST_CASE("lambda threshold") {
    const std::vector<double> norms{1.2, 0.8};
    const double b = 1.5, l = 2.0;
    const std::size_t d = 2, k = 9;
    const double z0 = b * depth_factor(d) * 1.2 * 0.8 / (l * std::sqrt(9.0));
    CHECK(lambda_threshold(b, d, norms, l, k, z0) == doctest::Approx(1.5).epsilon(1e-15));
    double last = INFINITY;
    for (double z = 0.0; z < 5.0; z += 0.5) {
        const double t = lambda_threshold(b, d, norms, l, k, z);
        CHECK(t < last);
        CHECK(t > 1.0);
        last = t;
    }
}

TEST_CASE("rademacher term") {
    const std::vector<double> one{1.0};
    CHECK(rademacher_term(1, 1.0, 1, one) == doctest::Approx(2.1774100225154746910).epsilon(1e-15));
    const std::vector<double> with_zero{2.0, 0.0};
    CHECK(rademacher_term(10, 1.0, 2, with_zero) == 0.0);
    const std::vector<double> m{1.3, 0.7, 2.0};
    CHECK(rademacher_term(400, 0.5, 3, m) == doctest::Approx(2 * rademacher_term(100, 0.5, 3, m)).epsilon(1e-15));
}

TEST_CASE("discrepancy proxy") {
    Rng rng(3);
    LabeledDataset id, ood;
    id.num_classes = ood.num_classes = 3;
    for (int i = 0; i < 30; ++i) {
        id.push_back(std::vector<double>{rng.normal(), rng.normal()}, rng.below(3), Provenance::InDistribution);
        ood.push_back(std::vector<double>{3 + rng.normal(), rng.normal()}, rng.below(3), Provenance::OutOfDistribution);
    }
    std::vector<ModelParams> pool;
    for (int i = 0; i < 6; ++i) pool.push_back(init_params(layer_widths(2, std::vector<std::size_t>{4}, 3), rng));

    CHECK(discrepancy_proxy(pool, id, id, LossMethod::standard()) == 0.0);
    const std::span<const ModelParams> first(pool.data(), 1);
    const double single = discrepancy_proxy(first, id, ood, LossMethod::standard());
    CHECK(single == std::abs(empirical_risk_value(LossMethod::standard(), pool[0], id) -
                             empirical_risk_value(LossMethod::standard(), pool[0], ood)));
    double last = 0.0;
    for (std::size_t n = 1; n <= pool.size(); ++n) {
        const double v = discrepancy_proxy(std::span<const ModelParams>(pool.data(), n), id, ood, LossMethod::gl());
        CHECK(v >= last);
        last = v;
    }
    CHECK_THROWS_AS(discrepancy_proxy(std::span<const ModelParams>{}, id, ood, LossMethod::gl()), UsageError);
}

}
