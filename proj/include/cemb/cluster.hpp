// cluster.hpp
// Frequency-weighted row clustering: many table rows share one centroid.
// Lloyd's iterations on objective sum_i freq_i * ||row_i - centroid(a_i)||^2,
// capped at 50 iterations or relative objective change below 1e-6.
// init=frequent seeds centroids at the k most frequent rows (ties toward the
// lower index); init=random draws k distinct rows from the given seed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/matrix.hpp"
#include "cemb/rng.hpp"

namespace cemb {

enum class ClusterInit { frequent, random };

struct ClusteredTable {
    Mat<float> centroids;                 // k x d
    std::vector<std::uint32_t> assignment; // n
    std::vector<double> objective_trace;  // objective after each assignment pass
    double objective = 0.0;

    std::size_t bytes() const {
        return centroids.size() * sizeof(float) + assignment.size() * sizeof(std::uint32_t);
    }
};

inline ClusteredTable cluster_rows(const Mat<float>& table, std::span<const double> freqs,
                                   std::size_t k, ClusterInit init, std::uint64_t seed = 0) {
    const std::size_t n = table.rows, d = table.cols;
    if (n < 1 || d < 1) throw param_error("cluster_rows: empty table");
    if (k < 1 || k > n) throw param_error("cluster_rows: need 1 <= k <= n");
    if (freqs.size() != n) throw shape_error("cluster_rows: freqs length != row count");
    for (auto f : freqs)
        if (f < 0.0 || !std::isfinite(f)) throw param_error("cluster_rows: bad frequency");

    ClusteredTable ct;
    ct.centroids = Mat<float>(k, d);
    ct.assignment.assign(n, 0);

    std::vector<std::size_t> seed_rows;
    if (init == ClusterInit::frequent) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return freqs[a] > freqs[b]; });
        seed_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
        // partial Fisher-Yates for k distinct rows
        Rng rng(seed);
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(pool[i], pool[i + rng.below(n - i)]);
            seed_rows.push_back(pool[i]);
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        const float* src = table.row_ptr(seed_rows[c]);
        std::copy(src, src + d, ct.centroids.row_ptr(c));
    }

    constexpr std::size_t max_iters = 50;
    constexpr double rel_tol = 1e-6;
    std::vector<double> row_dist(n, 0.0);
    double prev_obj = std::numeric_limits<double>::infinity();

    for (std::size_t it = 0; it < max_iters; ++it) {
        // assignment pass
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const float* row = table.row_ptr(i);
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const float* cent = ct.centroids.row_ptr(c);
                double dist = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = static_cast<double>(row[j]) - cent[j];
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    best_c = static_cast<std::uint32_t>(c);
                }
            }
            ct.assignment[i] = best_c;
            row_dist[i] = best;
            obj += freqs[i] * best;
        }
        ct.objective_trace.push_back(obj);
        ct.objective = obj;

        const bool converged =
            std::isfinite(prev_obj) &&
            std::abs(prev_obj - obj) <= rel_tol * std::max(prev_obj, 1e-30);
        prev_obj = obj;
        if (converged || it + 1 == max_iters) break;

        // update pass: frequency-weighted means; zero-weight clusters fall
        // back to the unweighted mean of their members
        Mat<double> sums(k, d);
        std::vector<double> wsum(k, 0.0);
        Mat<double> usums(k, d);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = ct.assignment[i];
            const float* row = table.row_ptr(i);
            for (std::size_t j = 0; j < d; ++j) {
                sums(c, j) += freqs[i] * row[j];
                usums(c, j) += row[j];
            }
            wsum[c] += freqs[i];
            ++count[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (wsum[c] > 0.0) {
                for (std::size_t j = 0; j < d; ++j)
                    ct.centroids(c, j) = static_cast<float>(sums(c, j) / wsum[c]);
            } else if (count[c] > 0) {
                for (std::size_t j = 0; j < d; ++j)
                    ct.centroids(c, j) =
                        static_cast<float>(usums(c, j) / static_cast<double>(count[c]));
            } else {
                // empty cluster: reseed at the row with the largest weighted
                // distance to its centroid (ties toward the lower index)
                std::size_t worst = 0;
                double worst_dist = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wd = freqs[i] * row_dist[i];
                    if (wd > worst_dist) {
                        worst_dist = wd;
                        worst = i;
                    }
                }
                const float* src = table.row_ptr(worst);
                std::copy(src, src + d, ct.centroids.row_ptr(c));
                row_dist[worst] = 0.0; // spend this row once per pass
            }
        }
    }
    return ct;
}

inline Mat<float> cluster_reconstruct(const ClusteredTable& ct) {
    Mat<float> out(ct.assignment.size(), ct.centroids.cols);
    for (std::size_t i = 0; i < ct.assignment.size(); ++i) {
        const float* src = ct.centroids.row_ptr(ct.assignment[i]);
        std::copy(src, src + ct.centroids.cols, out.row_ptr(i));
    }
    return out;
}

} // namespace cemb
