// heuristic.hpp
// Candidate (r, p) generator for the factorized layer under a capacity
// budget C: one candidate per allowed rank r <= C, paired with p = floor(C/r)
// so every candidate satisfies r*p <= C. The default pick maximizes p (more
// summed terms beats more rank per term at equal budget), tie-broken toward
// the smaller rank.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/layers.hpp"

namespace cemb {

struct CandidatePair {
    std::size_t r = 0;
    std::size_t p = 0;
    std::size_t predicted_bytes = 0;

    bool operator==(const CandidatePair& o) const { return r == o.r && p == o.p; }
};

struct Recommendation {
    std::vector<CandidatePair> candidates; // descending r
    bool warning = false;
    std::string note;
};

inline std::size_t frobenius_param_bytes(std::size_t n, std::size_t d, std::size_t r,
                                         std::size_t p) {
    const std::size_t m = ceil_sqrt(n);
    const std::size_t nq = ceil_div(n, m);
    return p * (nq * r + m * r + r * d) * 4;
}

inline Recommendation recommend_pairs(std::size_t n, std::size_t d, std::size_t capacity = 32,
                                      std::vector<std::size_t> allowed_r = {8, 16, 24, 32}) {
    if (n < 1 || d < 1) throw param_error("recommend_pairs: n and d must be >= 1");
    if (allowed_r.empty()) throw param_error("recommend_pairs: empty rank grid");
    Recommendation rec;
    std::sort(allowed_r.rbegin(), allowed_r.rend());
    allowed_r.erase(std::unique(allowed_r.begin(), allowed_r.end()), allowed_r.end());
    if (capacity < allowed_r.back()) {
        rec.warning = true;
        rec.note = "capacity " + std::to_string(capacity) +
                   " below smallest allowed rank " + std::to_string(allowed_r.back()) +
                   "; no candidates";
        return rec;
    }
    for (auto r : allowed_r) {
        if (r < 1 || r > capacity) continue;
        CandidatePair c{r, capacity / r, 0};
        c.predicted_bytes = frobenius_param_bytes(n, d, c.r, c.p);
        if (std::find(rec.candidates.begin(), rec.candidates.end(), c) ==
            rec.candidates.end())
            rec.candidates.push_back(c);
    }
    return rec;
}

inline CandidatePair select_default(std::span<const CandidatePair> pairs) {
    if (pairs.empty()) throw param_error("select_default: empty candidate list");
    CandidatePair best = pairs[0];
    for (const auto& c : pairs.subspan(1))
        if (c.p > best.p || (c.p == best.p && c.r < best.r)) best = c;
    return best;
}

} // namespace cemb
