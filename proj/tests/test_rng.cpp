#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cemb/rng.hpp"

TEST_CASE("equal seeds give equal streams") {
    cemb::Rng a(2024), b(2024);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
    for (int i = 0; i < 1000; ++i) REQUIRE(a.uniform() == b.uniform());
    for (int i = 0; i < 1000; ++i) REQUIRE(a.normal() == b.normal());
}

TEST_CASE("different seeds diverge") {
    cemb::Rng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 100; ++i) equal += (a.next_u64() == b.next_u64()) ? 1 : 0;
    REQUIRE(equal == 0);
}

TEST_CASE("uniform stays in [0,1)") {
    cemb::Rng rng(3);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("uniform moments") {
    cemb::Rng rng(11);
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        sum += u;
        sq += u * u;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(0.5, 0.005));
    REQUIRE_THAT(var, Catch::Matchers::WithinAbs(1.0 / 12.0, 0.005));
}

TEST_CASE("normal moments") {
    cemb::Rng rng(17);
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double std = std::sqrt(sq / n - mean * mean);
    REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.01));
    REQUIRE_THAT(std, Catch::Matchers::WithinAbs(1.0, 0.01));
}

TEST_CASE("scaled normal") {
    cemb::Rng rng(23);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(3.0, 0.5);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double std = std::sqrt(sq / n - mean * mean);
    REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(3.0, 0.01));
    REQUIRE_THAT(std, Catch::Matchers::WithinAbs(0.5, 0.01));
}

TEST_CASE("below covers range without bias") {
    cemb::Rng rng(31);
    const std::uint64_t n = 10;
    std::vector<int> hist(n, 0);
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
        const auto v = rng.below(n);
        REQUIRE(v < n);
        ++hist[v];
    }
    for (auto h : hist)
        REQUIRE_THAT(static_cast<double>(h) / draws,
                     Catch::Matchers::WithinAbs(0.1, 0.005));
}

TEST_CASE("below(1) is always 0") {
    cemb::Rng rng(37);
    for (int i = 0; i < 100; ++i) REQUIRE(rng.below(1) == 0);
}

TEST_CASE("rng_normal matrix moments and degenerate std") {
    cemb::Rng rng(41);
    const auto m = cemb::rng_normal<float>(rng, 1000, 1000, 0.0, 1.0);
    double sum = 0.0, sq = 0.0;
    for (auto v : m.data) {
        sum += v;
        sq += static_cast<double>(v) * v;
    }
    const double mean = sum / static_cast<double>(m.size());
    const double std = std::sqrt(sq / static_cast<double>(m.size()) - mean * mean);
    REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.01));
    REQUIRE_THAT(std, Catch::Matchers::WithinAbs(1.0, 0.01));

    cemb::Rng rng2(43);
    const auto z = cemb::rng_normal<double>(rng2, 4, 3, 2.5, 0.0);
    for (auto v : z.data) REQUIRE(v == 2.5);

    cemb::Rng rng3(47);
    REQUIRE_THROWS_AS(cemb::rng_normal<float>(rng3, 2, 2, 0.0, -1.0), cemb::param_error);
}
