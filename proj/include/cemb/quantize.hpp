// quantize.hpp
// Row-wise int4 quantization of a dense table, two codebook strategies:
//   minmax: 16-level affine grid over [row min, row max]
//   kmeans: per-row 1-D Lloyd codebook (k=16, 25 iterations), run from two
//           starts (midpoint quantiles and the minmax grid), better fit kept;
//           the grid start makes the result never worse than minmax
// Codes pack two per byte, flattened row-major, low nibble first.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/matrix.hpp"

namespace cemb {

enum class QuantStrategy { minmax, kmeans };

inline const char* quant_strategy_name(QuantStrategy s) {
    return s == QuantStrategy::minmax ? "minmax" : "kmeans";
}

struct QuantizedTable {
    std::size_t n = 0;
    std::size_t d = 0;
    QuantStrategy strategy = QuantStrategy::minmax;
    std::vector<std::uint8_t> codes; // ceil(n*d/2) bytes
    std::vector<float> scale;        // minmax: n
    std::vector<float> offset;       // minmax: n
    Mat<float> codebook;             // kmeans: n x 16

    std::uint8_t code_at(std::size_t flat) const {
        const std::uint8_t byte = codes[flat >> 1];
        return (flat & 1) ? static_cast<std::uint8_t>(byte >> 4)
                          : static_cast<std::uint8_t>(byte & 0x0f);
    }

    float entry(std::size_t r, std::size_t c) const {
        const std::uint8_t code = code_at(r * d + c);
        if (strategy == QuantStrategy::minmax) return offset[r] + scale[r] * code;
        return codebook(r, code);
    }

    // payload accounting: packed codes plus per-row side data
    std::size_t bytes() const {
        const std::size_t packed = (n * d + 1) / 2;
        if (strategy == QuantStrategy::minmax) return packed + n * 2 * sizeof(float);
        return packed + n * 16 * sizeof(float);
    }
};

namespace detail {

inline void pack_code(std::vector<std::uint8_t>& codes, std::size_t flat, std::uint8_t code) {
    std::uint8_t& byte = codes[flat >> 1];
    if (flat & 1)
        byte = static_cast<std::uint8_t>((byte & 0x0f) | (code << 4));
    else
        byte = static_cast<std::uint8_t>((byte & 0xf0) | (code & 0x0f));
}

// Lloyd iterations from the given centers; assignment by nearest value (ties
// to the lower code), empty codes keep their value. Returns the squared error
// of reconstructing each entry by its final cluster mean.
inline double lloyd16(const float* row, std::size_t d, float* centers,
                      std::uint8_t* assign) {
    constexpr std::size_t K = 16;
    constexpr std::size_t iters = 25;
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t c = 0; c < d; ++c) {
            std::uint8_t best = 0;
            float best_dist = std::numeric_limits<float>::infinity();
            for (std::size_t j = 0; j < K; ++j) {
                const float diff = row[c] - centers[j];
                const float dist = diff * diff;
                if (dist < best_dist) {
                    best_dist = dist;
                    best = static_cast<std::uint8_t>(j);
                }
            }
            assign[c] = best;
        }
        double sum[K] = {};
        std::size_t count[K] = {};
        for (std::size_t c = 0; c < d; ++c) {
            sum[assign[c]] += row[c];
            ++count[assign[c]];
        }
        for (std::size_t j = 0; j < K; ++j)
            if (count[j] > 0) centers[j] = static_cast<float>(sum[j] / count[j]);
    }
    double sse = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        const double diff = static_cast<double>(row[c]) - centers[assign[c]];
        sse += diff * diff;
    }
    return sse;
}

inline void row_kmeans16(const float* row, std::size_t d, float* centers,
                         std::uint8_t* out_codes) {
    constexpr std::size_t K = 16;
    std::vector<float> sorted(row, row + d);
    std::sort(sorted.begin(), sorted.end());

    float quantile[K];
    for (std::size_t j = 0; j < K; ++j) {
        auto pos = static_cast<std::size_t>(
            (static_cast<double>(j) + 0.5) / static_cast<double>(K) * static_cast<double>(d));
        quantile[j] = sorted[std::min(pos, d - 1)];
    }
    float grid[K];
    const float mn = sorted.front(), mx = sorted.back();
    for (std::size_t j = 0; j < K; ++j)
        grid[j] = mn + (mx - mn) / 15.0f * static_cast<float>(j);

    std::vector<std::uint8_t> qa(d, 0), ga(d, 0);
    const double q_sse = lloyd16(row, d, quantile, qa.data());
    const double g_sse = lloyd16(row, d, grid, ga.data());
    const float* best_centers = g_sse < q_sse ? grid : quantile;
    const std::uint8_t* best_assign = g_sse < q_sse ? ga.data() : qa.data();
    std::copy(best_centers, best_centers + K, centers);
    for (std::size_t c = 0; c < d; ++c) out_codes[c] = best_assign[c];
}

} // namespace detail

inline QuantizedTable quantize_int4(const Mat<float>& table, QuantStrategy strategy) {
    if (table.rows < 1 || table.cols < 1) throw param_error("quantize_int4: empty table");
    QuantizedTable qt;
    qt.n = table.rows;
    qt.d = table.cols;
    qt.strategy = strategy;
    qt.codes.assign((qt.n * qt.d + 1) / 2, 0);

    if (strategy == QuantStrategy::minmax) {
        qt.scale.resize(qt.n);
        qt.offset.resize(qt.n);
        for (std::size_t r = 0; r < qt.n; ++r) {
            const float* row = table.row_ptr(r);
            const auto [mn_it, mx_it] = std::minmax_element(row, row + qt.d);
            const float mn = *mn_it, mx = *mx_it;
            const float scale = (mx - mn) / 15.0f;
            qt.offset[r] = mn;
            qt.scale[r] = scale;
            if (scale == 0.0f) continue; // constant row: codes stay 0
            for (std::size_t c = 0; c < qt.d; ++c) {
                const float q = std::round((row[c] - mn) / scale);
                const auto code = static_cast<std::uint8_t>(
                    std::clamp(q, 0.0f, 15.0f));
                detail::pack_code(qt.codes, r * qt.d + c, code);
            }
        }
    } else {
        qt.codebook = Mat<float>(qt.n, 16);
        std::vector<std::uint8_t> row_codes(qt.d);
        for (std::size_t r = 0; r < qt.n; ++r) {
            detail::row_kmeans16(table.row_ptr(r), qt.d, qt.codebook.row_ptr(r),
                                 row_codes.data());
            for (std::size_t c = 0; c < qt.d; ++c)
                detail::pack_code(qt.codes, r * qt.d + c, row_codes[c]);
        }
    }
    return qt;
}

inline Mat<float> dequantize(const QuantizedTable& qt) {
    Mat<float> out(qt.n, qt.d);
    for (std::size_t r = 0; r < qt.n; ++r)
        for (std::size_t c = 0; c < qt.d; ++c) out(r, c) = qt.entry(r, c);
    return out;
}

template <class T>
double normalized_l2_loss(const Mat<T>& original, const Mat<T>& approx) {
    if (!original.same_shape(approx)) throw shape_error("normalized_l2_loss: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double diff = static_cast<double>(original.data[i]) -
                            static_cast<double>(approx.data[i]);
        num += diff * diff;
        den += static_cast<double>(original.data[i]) * static_cast<double>(original.data[i]);
    }
    if (den == 0.0)
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num) / std::sqrt(den);
}

} // namespace cemb
