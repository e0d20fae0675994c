// jl.hpp
// Segmented random-projection compression. Each row splits into s chunks of
// d/s entries; chunk c is stored as S_c * chunk where S_c is t x (d/s) with
// i.i.d. N(0, 1/t) entries regenerated from a stored seed, so only the seed
// and the projected values persist. Reconstruction applies the transpose and
// concatenates the segments.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/matrix.hpp"
#include "cemb/rng.hpp"

namespace cemb {

struct ProjectedTable {
    std::size_t n = 0;
    std::size_t d = 0;          // original dimension
    std::size_t segments = 1;   // s, divides d
    std::size_t target_dim = 0; // t per segment, t <= d/s
    std::uint64_t seed = 0;
    bool oracle_identity = false; // test hook: S is the identity (needs t == d/s)
    Mat<float> stored;            // n x (s * t)

    std::size_t chunk_dim() const { return d / segments; }
    std::size_t bytes() const { return stored.size() * sizeof(float) + sizeof(seed); }
};

namespace detail {

inline Mat<float> jl_matrix(const ProjectedTable& pt, std::size_t segment) {
    Mat<float> s(pt.target_dim, pt.chunk_dim());
    if (pt.oracle_identity) {
        for (std::size_t i = 0; i < pt.target_dim && i < pt.chunk_dim(); ++i) s(i, i) = 1.0f;
        return s;
    }
    Rng rng(pt.seed + segment);
    const double std = 1.0 / std::sqrt(static_cast<double>(pt.target_dim));
    for (auto& v : s.data) v = static_cast<float>(rng.normal() * std);
    return s;
}

} // namespace detail

inline ProjectedTable jl_project(const Mat<float>& table, std::size_t segments,
                                 std::size_t target_dim, std::uint64_t seed,
                                 bool oracle_identity = false) {
    if (table.rows < 1 || table.cols < 1) throw param_error("jl_project: empty table");
    if (segments < 1 || table.cols % segments != 0)
        throw config_error("jl_project: segments must divide d");
    const std::size_t chunk = table.cols / segments;
    if (target_dim < 1 || target_dim > chunk)
        throw config_error("jl_project: need 1 <= target_dim <= d/segments");
    if (oracle_identity && target_dim != chunk)
        throw config_error("jl_project: identity oracle needs target_dim == d/segments");

    ProjectedTable pt;
    pt.n = table.rows;
    pt.d = table.cols;
    pt.segments = segments;
    pt.target_dim = target_dim;
    pt.seed = seed;
    pt.oracle_identity = oracle_identity;
    pt.stored = Mat<float>(pt.n, segments * target_dim);

    for (std::size_t seg = 0; seg < segments; ++seg) {
        const Mat<float> s = detail::jl_matrix(pt, seg);
        for (std::size_t r = 0; r < pt.n; ++r) {
            const float* src = table.row_ptr(r) + seg * chunk;
            float* dst = pt.stored.row_ptr(r) + seg * target_dim;
            for (std::size_t i = 0; i < target_dim; ++i) {
                double acc = 0.0;
                const float* srow = s.row_ptr(i);
                for (std::size_t j = 0; j < chunk; ++j) acc += static_cast<double>(srow[j]) * src[j];
                dst[i] = static_cast<float>(acc);
            }
        }
    }
    return pt;
}

inline std::vector<float> jl_reconstruct_row(const ProjectedTable& pt, std::size_t i) {
    if (i >= pt.n) throw index_error("jl_reconstruct_row: row out of range");
    const std::size_t chunk = pt.chunk_dim();
    std::vector<float> row(pt.d, 0.0f);
    for (std::size_t seg = 0; seg < pt.segments; ++seg) {
        const Mat<float> s = detail::jl_matrix(pt, seg);
        const float* src = pt.stored.row_ptr(i) + seg * pt.target_dim;
        float* dst = row.data() + seg * chunk;
        for (std::size_t t = 0; t < pt.target_dim; ++t) {
            const float v = src[t];
            const float* srow = s.row_ptr(t);
            for (std::size_t j = 0; j < chunk; ++j) dst[j] += v * srow[j];
        }
    }
    return row;
}

inline Mat<float> jl_reconstruct(const ProjectedTable& pt) {
    Mat<float> out(pt.n, pt.d);
    const std::size_t chunk = pt.chunk_dim();
    for (std::size_t seg = 0; seg < pt.segments; ++seg) {
        const Mat<float> s = detail::jl_matrix(pt, seg);
        for (std::size_t i = 0; i < pt.n; ++i) {
            const float* src = pt.stored.row_ptr(i) + seg * pt.target_dim;
            float* dst = out.row_ptr(i) + seg * chunk;
            for (std::size_t t = 0; t < pt.target_dim; ++t) {
                const float v = src[t];
                const float* srow = s.row_ptr(t);
                for (std::size_t j = 0; j < chunk; ++j) dst[j] += v * srow[j];
            }
        }
    }
    return out;
}

// classic distortion bound: dimensions needed so all pairs among n points
// keep squared distances within (1 +- eps) with good probability
inline std::size_t jl_target_dim(std::size_t n_points, double eps) {
    if (n_points < 2) throw param_error("jl_target_dim: need at least 2 points");
    if (eps <= 0.0 || eps >= 1.0) throw param_error("jl_target_dim: eps must be in (0,1)");
    const double denom = eps * eps / 2.0 - eps * eps * eps / 3.0;
    return static_cast<std::size_t>(
        std::ceil(4.0 * std::log(static_cast<double>(n_points)) / denom));
}

} // namespace cemb
