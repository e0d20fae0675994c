// metrics.hpp
// Binary cross-entropy on logits and ROC AUC.
//
// BCE uses the overflow-safe form max(z,0) - z*y + log(1 + exp(-|z|)).
// AUC is the Mann-Whitney statistic computed from average ranks, so tied
// scores contribute 0.5 per positive/negative pair.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "cemb/error.hpp"

namespace cemb {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double bce_loss(double logit, double label) {
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

// d(bce)/d(logit) = sigmoid(logit) - label
inline double bce_grad(double logit, double label) { return sigmoid(logit) - label; }

inline double auc(std::span<const double> scores, std::span<const float> labels) {
    if (scores.size() != labels.size()) throw shape_error("auc: size mismatch");
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (auto y : labels) pos += (y > 0.5f) ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0)
        throw metric_error("auc undefined: validation labels are single-class");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups, 1-based
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] > 0.5f) pos_rank_sum += avg_rank;
        i = j;
    }
    const double u = pos_rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

} // namespace cemb
