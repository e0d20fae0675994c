#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cemb/metrics.hpp"
#include "cemb/rng.hpp"

using namespace cemb;

namespace {

// oracle: textbook bce through probabilities (unstable for large |z|,
// fine for moderate logits)
double naive_bce(double z, double y) {
    const double p = 1.0 / (1.0 + std::exp(-z));
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

// oracle: all-pairs Mann-Whitney count
double naive_auc(const std::vector<double>& scores, const std::vector<float>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] <= 0.5f) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] > 0.5f) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

} // namespace

TEST_CASE("bce matches the naive formula at moderate logits") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const double z = (rng.uniform() - 0.5) * 20.0;
        for (const double y : {0.0, 1.0})
            REQUIRE_THAT(bce_loss(z, y), Catch::Matchers::WithinAbs(naive_bce(z, y), 1e-9));
    }
}

TEST_CASE("bce stays finite at extreme logits") {
    for (const double z : {-1000.0, -100.0, 100.0, 1000.0}) {
        for (const double y : {0.0, 1.0}) {
            const double loss = bce_loss(z, y);
            REQUIRE(std::isfinite(loss));
            REQUIRE(loss >= 0.0);
        }
    }
    // correct prediction at huge margin: loss ~ 0
    REQUIRE(bce_loss(1000.0, 1.0) == 0.0);
    REQUIRE(bce_loss(-1000.0, 0.0) == 0.0);
    // wrong prediction at huge margin: loss ~ |z|
    REQUIRE_THAT(bce_loss(1000.0, 0.0), Catch::Matchers::WithinRel(1000.0, 1e-9));
}

TEST_CASE("bce_grad matches finite differences") {
    const double h = 1e-6;
    for (const double z : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
        for (const double y : {0.0, 1.0}) {
            const double fd = (bce_loss(z + h, y) - bce_loss(z - h, y)) / (2.0 * h);
            REQUIRE_THAT(bce_grad(z, y), Catch::Matchers::WithinAbs(fd, 1e-6));
        }
    }
}

TEST_CASE("sigmoid basics") {
    REQUIRE(sigmoid(0.0) == 0.5);
    REQUIRE_THAT(sigmoid(2.0) + sigmoid(-2.0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(sigmoid(1000.0) == 1.0);
    REQUIRE_THAT(sigmoid(-1000.0), Catch::Matchers::WithinAbs(0.0, 1e-300));
}

TEST_CASE("auc hand cases") {
    SECTION("perfect ranking") {
        const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
        const std::vector<float> y{0, 0, 1, 1};
        REQUIRE(auc(s, y) == 1.0);
    }
    SECTION("inverted ranking") {
        const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
        const std::vector<float> y{0, 0, 1, 1};
        REQUIRE(auc(s, y) == 0.0);
    }
    SECTION("all scores tied") {
        const std::vector<double> s{0.5, 0.5, 0.5, 0.5};
        const std::vector<float> y{0, 1, 0, 1};
        REQUIRE(auc(s, y) == 0.5);
    }
    SECTION("partial ties") {
        const std::vector<double> s{0.1, 0.5, 0.5, 0.9};
        const std::vector<float> y{0, 0, 1, 1};
        // pairs: (s3>s1)=1, (s3>s2)=1, (s2 vs s1)=1, (s2 vs s2 tie)=0.5 -> 3.5/4
        REQUIRE_THAT(auc(s, y), Catch::Matchers::WithinAbs(0.875, 1e-12));
    }
}

TEST_CASE("auc matches all-pairs oracle on random data") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> s;
        std::vector<float> y;
        for (int i = 0; i < 200; ++i) {
            // coarse grid forces plenty of ties
            s.push_back(std::round(rng.uniform() * 20.0) / 20.0);
            y.push_back(rng.uniform() < 0.3 ? 1.0f : 0.0f);
        }
        bool has_pos = false, has_neg = false;
        for (auto v : y) (v > 0.5f ? has_pos : has_neg) = true;
        if (!has_pos || !has_neg) continue;
        REQUIRE_THAT(auc(s, y), Catch::Matchers::WithinAbs(naive_auc(s, y), 1e-12));
    }
}

TEST_CASE("auc rejects degenerate inputs") {
    const std::vector<double> s{0.1, 0.2};
    REQUIRE_THROWS_AS(auc(s, std::vector<float>{1, 1}), metric_error);
    REQUIRE_THROWS_AS(auc(s, std::vector<float>{0, 0}), metric_error);
    REQUIRE_THROWS_AS(auc(s, std::vector<float>{1}), shape_error);
}
