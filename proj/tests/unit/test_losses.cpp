#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gradcheck.hpp"
#include "graylearn/errors.hpp"
#include "graylearn/losses.hpp"

using namespace graylearn;

namespace {

const std::vector<double> kHalf{0.5, 0.5};
const std::vector<double> kSkew{0.2, 0.4, 0.4};

// High-precision values for probs (0.2, 0.4, 0.4), y = first class.
constexpr double kSkewLossG = 1.6094379124341003746;
constexpr double kSkewLossC = 1.0216512475319813664;
constexpr double kSkewLossM = 1.1392085805124051680;
constexpr double kSkewR = -0.47022933192169520655;

std::vector<double> random_probs(Rng& rng, std::size_t k, double scale) {
    std::vector<double> z(k);
    for (auto& v : z) v = scale * rng.normal();
    return softmax(z);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("confidence") {
    CHECK(confidence(kHalf, 0) == 0.5);
    CHECK(confidence(kSkew, 0) == 0.2);
    const auto saturated = softmax(std::vector<double>{100.0, 0.0});
    CHECK(confidence(saturated, 0) == 1.0 - 1e-7);
    CHECK_THROWS_AS(confidence(kSkew, 3), IndexError);
}

TEST_CASE("ground-truth loss") {
    const auto saturated = softmax(std::vector<double>{100.0, 0.0});
    CHECK(loss_ground_truth(saturated, 0) == doctest::Approx(1e-7).epsilon(1e-6));
    const std::vector<double> inv_e{1.0 / std::exp(1.0), 1.0 - 1.0 / std::exp(1.0)};
    CHECK(loss_ground_truth(inv_e, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(loss_ground_truth(kSkew, 0) == doctest::Approx(kSkewLossG).epsilon(1e-15));
    CHECK_THROWS_AS(loss_ground_truth(kSkew, 5), IndexError);
}

TEST_CASE("complementary set") {
    CHECK(complementary_set(0, 2) == std::vector<std::size_t>{1});
    CHECK(complementary_set(2, 3) == std::vector<std::size_t>{0, 1});
    CHECK(complementary_set(4, 10) == std::vector<std::size_t>{0, 1, 2, 3, 5, 6, 7, 8, 9});
    CHECK_THROWS_AS(complementary_set(3, 3), IndexError);
}

TEST_CASE("complementary loss") {
    CHECK(loss_complementary(kHalf, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(loss_complementary(kSkew, 0) == doctest::Approx(kSkewLossC).epsilon(1e-15));
    const auto saturated = softmax(std::vector<double>{100.0, 0.0, 0.0, 0.0});
    CHECK(loss_complementary(saturated, 0) == doctest::Approx(3.0 * -std::log1p(-1e-7)).epsilon(1e-9));
    CHECK(loss_complementary(saturated, 0) < 1e-6);
}

TEST_CASE("gl loss breakdown") {
    const auto b = loss_gl(kSkew, 0);
    CHECK(b.confidence == 0.2);
    CHECK(b.loss_g == doctest::Approx(kSkewLossG).epsilon(1e-15));
    CHECK(b.loss_c == doctest::Approx(kSkewLossC).epsilon(1e-15));
    CHECK(b.loss_m == doctest::Approx(kSkewLossM).epsilon(1e-14));
    CHECK(b.regularizer == doctest::Approx(kSkewR).epsilon(1e-14));

    const auto hi = loss_gl(softmax(std::vector<double>{50.0, 0.0, 0.0}), 0);
    CHECK(hi.loss_m == doctest::Approx(hi.loss_g).epsilon(1e-6));
    const auto lo = loss_gl(softmax(std::vector<double>{0.0, 50.0, 50.0}), 0);
    CHECK(std::abs(lo.loss_m - lo.loss_c) < 1e-5 * lo.loss_c);
}

TEST_CASE("regularizer") {
    CHECK(regularizer_r(kSkew, 0) == doctest::Approx(kSkewR).epsilon(1e-14));
    CHECK(std::abs(regularizer_r(kHalf, 0)) < 1e-15);
    const auto b = loss_gl(kHalf, 0);
    CHECK(b.loss_g == doctest::Approx(std::log(2.0)));
    CHECK(b.loss_m == doctest::Approx(std::log(2.0)));
}

TEST_CASE("breakdown invariants on random vectors") {
    Rng rng(101);
    for (int t = 0; t < 10000; ++t) {
        const std::size_t k = 2 + rng.below(9);
        const auto p = random_probs(rng, k, 3.0);
        const std::size_t y = rng.below(k);
        const auto b = loss_gl(p, y);
        CHECK(std::abs(b.loss_m - (b.confidence * b.loss_g + (1 - b.confidence) * b.loss_c)) < 1e-12);
        CHECK(std::abs(b.loss_m - (b.loss_g + b.regularizer)) < 1e-10);
        CHECK(b.loss_m >= std::min(b.loss_g, b.loss_c) - 1e-12);
        CHECK(b.loss_m <= std::max(b.loss_g, b.loss_c) + 1e-12);
        CHECK(b.loss_g >= 0.0);
        CHECK(b.loss_c >= 0.0);
    }
}

TEST_CASE("baselines") {
    const auto saturated = softmax(std::vector<double>{100.0, 0.0, 0.0});
    CHECK(loss_baseline(LossMethod::mae(), saturated, 0) == doctest::Approx(4e-7).epsilon(1e-6));
    CHECK(loss_baseline(LossMethod::mae(), kSkew, 0) == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(loss_baseline(LossMethod::bootstrap(0.95), kHalf, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(loss_baseline(LossMethod::standard(), kSkew, 0) == loss_ground_truth(kSkew, 0));
    CHECK(loss_baseline(LossMethod::nl(), kSkew, 0) == loss_complementary(kSkew, 0));
    CHECK(loss_baseline(LossMethod::standard_plus_nl(), kSkew, 0) ==
          doctest::Approx(0.5 * (kSkewLossG + kSkewLossC)).epsilon(1e-15));
    CHECK_THROWS_AS(loss_baseline(LossMethod::gl(), kSkew, 0), UsageError);
}

TEST_CASE("confidence override endpoints are bit-exact") {
    Rng rng(55);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t k = 2 + rng.below(9);
        const auto p = random_probs(rng, k, 2.0);
        const std::size_t y = rng.below(k);
        CHECK(sample_loss(LossMethod::gl(), p, y, 1.0) == sample_loss(LossMethod::standard(), p, y));
        CHECK(sample_loss(LossMethod::gl(), p, y, 0.0) == sample_loss(LossMethod::nl(), p, y));
        CHECK(sample_loss_prob_grad(LossMethod::gl(), p, y, ConfidenceGradient::Full, 1.0) ==
              sample_loss_prob_grad(LossMethod::standard(), p, y, ConfidenceGradient::Full));
        CHECK(sample_loss_prob_grad(LossMethod::gl(), p, y, ConfidenceGradient::Full, 0.0) ==
              sample_loss_prob_grad(LossMethod::nl(), p, y, ConfidenceGradient::Full));
    }
}

TEST_CASE("method names round-trip") {
    for (const auto* name : {"gl", "standard", "nl", "standard+nl", "mae", "bootstrap", "bootstrap:0.8"}) {
        CHECK(to_string(parse_loss_method(name)) == name);
    }
    CHECK(parse_loss_method("bootstrap:0.8").beta == 0.8);
    CHECK_THROWS_AS(parse_loss_method("focal"), UsageError);
    CHECK_THROWS_AS(parse_loss_method("bootstrap:1.5"), UsageError);
    CHECK(parse_confidence_gradient("detached") == ConfidenceGradient::Detached);
    CHECK_THROWS_AS(parse_confidence_gradient("half"), UsageError);
}

TEST_CASE("empirical risk") {
    Rng rng(77);
    std::size_t rejected = 0;
    auto inst = testing::random_instance(rng, rejected);
    const std::size_t one[1] = {0};
    const auto single = empirical_risk(LossMethod::gl(), inst.params, inst.data, one);
    const auto probs = softmax(predict_logits(inst.params, inst.data.features.row(0)));
    CHECK(single.value == doctest::Approx(sample_loss(LossMethod::gl(), probs, inst.data.labels[0])).epsilon(1e-15));

    const std::size_t twice[2] = {0, 0};
    const auto doubled = empirical_risk(LossMethod::gl(), inst.params, inst.data, twice);
    CHECK(doubled.value == single.value);
    CHECK(doubled.grads == single.grads);

    CHECK_THROWS_AS(empirical_risk(LossMethod::gl(), inst.params, inst.data, std::span<const std::size_t>{}),
                    UsageError);
    CHECK(empirical_risk_value(LossMethod::standard(), inst.params, inst.data) > 0.0);
}

TEST_CASE("risk gradients match finite differences for every method") {
    for (const auto& c : testing::all_method_cases()) {
        CAPTURE(c.name);
        const auto r = testing::check_gradients(c.method, c.mode, 30, 1234);
        CAPTURE(r.worst);
        CHECK(r.instances == 30);
        CHECK(r.max_rel_error < 1e-5);
    }
}

TEST_CASE("detached and full gradients differ for gl") {
    Rng rng(3);
    std::size_t rejected = 0;
    auto inst = testing::random_instance(rng, rejected);
    RiskOptions full, detached;
    detached.confidence_gradient = ConfidenceGradient::Detached;
    const auto a = empirical_risk(LossMethod::gl(), inst.params, inst.data, inst.batch, full);
    const auto b = empirical_risk(LossMethod::gl(), inst.params, inst.data, inst.batch, detached);
    CHECK(a.value == b.value);
    CHECK_FALSE(a.grads == b.grads);
}

}
