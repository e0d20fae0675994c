#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cemb/cluster.hpp"
#include "cemb/quantize.hpp"
#include "cemb/rng.hpp"

using namespace cemb;

namespace {

// weighted objective recomputed from scratch
double naive_objective(const Mat<float>& t, std::span<const double> freqs,
                       const ClusteredTable& ct) {
    double obj = 0.0;
    for (std::size_t i = 0; i < t.rows; ++i) {
        const std::uint32_t c = ct.assignment[i];
        double dist = 0.0;
        for (std::size_t j = 0; j < t.cols; ++j) {
            const double diff = static_cast<double>(t(i, j)) - ct.centroids(c, j);
            dist += diff * diff;
        }
        obj += freqs[i] * dist;
    }
    return obj;
}

Mat<float> gaussian_table(std::uint64_t seed, std::size_t n, std::size_t d) {
    Rng rng(seed);
    return rng_normal<float>(rng, n, d, 0.0, 1.0);
}

std::vector<double> zipf_freqs(std::size_t n, double s) {
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::pow(static_cast<double>(i + 1), -s);
    return f;
}

} // namespace

TEST_CASE("k=1 centroid is the frequency-weighted mean") {
    Mat<float> t(3, 2);
    t(0, 0) = 1.0f; t(0, 1) = 0.0f;
    t(1, 0) = 0.0f; t(1, 1) = 7.0f;
    t(2, 0) = 2.0f; t(2, 1) = 0.0f;
    const std::vector<double> freqs{5.0, 1.0, 1.0};
    const auto ct = cluster_rows(t, freqs, 1, ClusterInit::frequent);

    // weighted mean: x = (5*1 + 0 + 2)/7 = 1, y = 7/7 = 1
    REQUIRE_THAT(ct.centroids(0, 0), Catch::Matchers::WithinAbs(1.0f, 1e-6f));
    REQUIRE_THAT(ct.centroids(0, 1), Catch::Matchers::WithinAbs(1.0f, 1e-6f));
    for (auto a : ct.assignment) REQUIRE(a == 0);
    // frequent init seeds at row 0, so the first trace entry is the objective
    // with centroid (1, 0)
    REQUIRE(ct.objective_trace.size() >= 2);
    REQUIRE_THAT(ct.objective_trace[0],
                 Catch::Matchers::WithinRel(5.0 * 0.0 + 1.0 * 50.0 + 1.0 * 1.0, 1e-6));
}

TEST_CASE("k equal to n reproduces the table exactly") {
    const auto t = gaussian_table(3, 12, 5);
    const auto freqs = zipf_freqs(12, 1.0);
    for (const auto init : {ClusterInit::frequent, ClusterInit::random}) {
        const auto ct = cluster_rows(t, freqs, 12, init, 4);
        REQUIRE(ct.objective == 0.0);
        const auto back = cluster_reconstruct(ct);
        for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(back.data[i] == t.data[i]);
    }
}

TEST_CASE("objective trace is monotone non-increasing") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto t = gaussian_table(40 + seed, 80, 8);
        const auto freqs = zipf_freqs(80, 1.1);
        for (const auto init : {ClusterInit::frequent, ClusterInit::random}) {
            const auto ct = cluster_rows(t, freqs, 8, init, seed);
            REQUIRE(!ct.objective_trace.empty());
            for (std::size_t i = 1; i < ct.objective_trace.size(); ++i)
                REQUIRE(ct.objective_trace[i] <= ct.objective_trace[i - 1] + 1e-9);
            REQUIRE(ct.objective == ct.objective_trace.back());
            REQUIRE_THAT(naive_objective(t, freqs, ct),
                         Catch::Matchers::WithinRel(ct.objective, 1e-9));
        }
    }
}

TEST_CASE("frequent init beats or ties random init under skewed weights") {
    std::size_t wins = 0;
    const std::size_t trials = 20;
    for (std::uint64_t s = 0; s < trials; ++s) {
        const auto t = gaussian_table(200 + s, 100, 12);
        const auto freqs = zipf_freqs(100, 1.3);
        const double freq_obj =
            cluster_rows(t, freqs, 10, ClusterInit::frequent).objective;
        const double rand_obj =
            cluster_rows(t, freqs, 10, ClusterInit::random, 777 + s).objective;
        if (freq_obj <= rand_obj) ++wins;
    }
    REQUIRE(wins >= 18);
}

TEST_CASE("random init depends only on the seed") {
    const auto t = gaussian_table(9, 50, 6);
    const auto freqs = zipf_freqs(50, 1.0);
    const auto a = cluster_rows(t, freqs, 7, ClusterInit::random, 42);
    const auto b = cluster_rows(t, freqs, 7, ClusterInit::random, 42);
    REQUIRE(a.assignment == b.assignment);
    for (std::size_t i = 0; i < a.centroids.size(); ++i)
        REQUIRE(a.centroids.data[i] == b.centroids.data[i]);
    const auto c = cluster_rows(t, freqs, 7, ClusterInit::random, 43);
    REQUIRE(a.assignment != c.assignment);
}

TEST_CASE("duplicate seed rows trigger the empty-cluster reseed") {
    // rows 0 and 1 are identical and the most frequent, so frequent init
    // seeds two centroids at the same point; one cluster starves and must
    // be reseeded somewhere useful
    Mat<float> t(6, 2);
    t(0, 0) = 0.0f; t(0, 1) = 0.0f;
    t(1, 0) = 0.0f; t(1, 1) = 0.0f;
    t(2, 0) = 10.0f; t(2, 1) = 10.0f;
    t(3, 0) = 10.1f; t(3, 1) = 10.0f;
    t(4, 0) = -5.0f; t(4, 1) = 4.0f;
    t(5, 0) = -5.1f; t(5, 1) = 4.1f;
    const std::vector<double> freqs{100.0, 90.0, 1.0, 1.0, 1.0, 1.0};
    const auto ct = cluster_rows(t, freqs, 3, ClusterInit::frequent);

    std::vector<bool> used(3, false);
    for (auto a : ct.assignment) used[a] = true;
    REQUIRE(used == std::vector<bool>{true, true, true});
    // with 3 well-separated groups the final objective is tiny
    REQUIRE(ct.objective < 0.1);
}

TEST_CASE("zero-weight rows still get a centroid through the unweighted path") {
    Mat<float> t(4, 1);
    t(0, 0) = 0.0f;
    t(1, 0) = 0.2f;
    t(2, 0) = 100.0f;
    t(3, 0) = 102.0f;
    // the far group carries no frequency mass; with k=3 it wins its own seed
    // (row 2 ranks third by frequency, ties toward the lower index)
    const std::vector<double> freqs{2.0, 1.0, 0.0, 0.0};
    const auto ct = cluster_rows(t, freqs, 3, ClusterInit::frequent);
    REQUIRE(ct.assignment[2] == ct.assignment[3]);
    REQUIRE(ct.assignment[0] != ct.assignment[2]);
    REQUIRE(ct.assignment[1] != ct.assignment[2]);
    // unweighted mean of the zero-weight members
    const float far = ct.centroids(ct.assignment[2], 0);
    REQUIRE_THAT(far, Catch::Matchers::WithinAbs(101.0f, 1e-4f));
}

TEST_CASE("clustering reduces table bytes and tracks reconstruction error") {
    const auto t = gaussian_table(31, 256, 16);
    const auto freqs = zipf_freqs(256, 1.1);
    const auto ct = cluster_rows(t, freqs, 16, ClusterInit::frequent);
    REQUIRE(ct.bytes() == 16 * 16 * 4 + 256 * 4);
    REQUIRE(ct.bytes() < 256 * 16 * 4);
    const double loss = normalized_l2_loss(t, cluster_reconstruct(ct));
    REQUIRE(loss > 0.0);
    REQUIRE(loss < 1.0);
}

TEST_CASE("cluster_rows input validation") {
    const auto t = gaussian_table(1, 10, 3);
    const auto freqs = zipf_freqs(10, 1.0);
    REQUIRE_THROWS_AS(cluster_rows(t, freqs, 0, ClusterInit::frequent), param_error);
    REQUIRE_THROWS_AS(cluster_rows(t, freqs, 11, ClusterInit::frequent), param_error);
    const std::vector<double> short_freqs(9, 1.0);
    REQUIRE_THROWS_AS(cluster_rows(t, short_freqs, 2, ClusterInit::frequent), shape_error);
    std::vector<double> neg = freqs;
    neg[3] = -1.0;
    REQUIRE_THROWS_AS(cluster_rows(t, neg, 2, ClusterInit::frequent), param_error);
    std::vector<double> nan_f = freqs;
    nan_f[0] = std::nan("");
    REQUIRE_THROWS_AS(cluster_rows(t, nan_f, 2, ClusterInit::frequent), param_error);
    Mat<float> empty;
    REQUIRE_THROWS_AS(cluster_rows(empty, std::vector<double>{}, 1, ClusterInit::frequent),
                      param_error);
}
