// layers.hpp
// Trainable embedding layer family: a native dense table plus five decomposed
// variants behind one interface. A layer maps row ids to d-dimensional vectors;
// decomposed kinds keep their parameters factorized through training and
// reconstruct rows on demand.
//
// Defining equations (row i, 0-based):
//   native             row_i = E[i]                          E: n x d
//   lowrank            row_i = A[i] * B                      A: n x r, B: r x d
//   quotient_remainder row_i = Q[i div m] .* R[i mod m]      m = ceil(sqrt(n))
//   memcom             row_i = s_i * M[i mod k]              s: n x 1, M: k x d
//   tensor_train       row_i = reshape(G_1[i_1] * ... * G_K[i_K]), mixed-radix
//                      digits of i over row_factors, most significant first
//   frobenius          row_i = sum_j (A_j[q] .* B_j[t]) * W_j, q = i div m,
//                      t = i mod m, A_j: ceil(n/m) x r, B_j: m x r, W_j: r x d
//
// Initialization matches the native N(0, init_std^2) entry distribution in
// mean and variance: each factor is i.i.d. N(0, sigma_f^2) with sigma_f chosen
// so the product/sum variance telescopes to init_std^2 (see init_factor_std).
//
// Out-of-range indices are hard errors, never hashed or clamped.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/matrix.hpp"
#include "cemb/rng.hpp"

namespace cemb {

enum class LayerKind { native, lowrank, quotient_remainder, memcom, tensor_train, frobenius };

inline const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::native: return "native";
        case LayerKind::lowrank: return "lowrank";
        case LayerKind::quotient_remainder: return "quotient_remainder";
        case LayerKind::memcom: return "memcom";
        case LayerKind::tensor_train: return "tensor_train";
        case LayerKind::frobenius: return "frobenius";
    }
    return "?";
}

inline LayerKind parse_kind(const std::string& s) {
    if (s == "native") return LayerKind::native;
    if (s == "lowrank") return LayerKind::lowrank;
    if (s == "quotient_remainder") return LayerKind::quotient_remainder;
    if (s == "memcom") return LayerKind::memcom;
    if (s == "tensor_train") return LayerKind::tensor_train;
    if (s == "frobenius") return LayerKind::frobenius;
    throw config_error("unknown layer kind: " + s);
}

struct EmbeddingSpec {
    std::size_t n = 0;      // table cardinality
    std::size_t d = 0;      // embedding dimension
    double init_std = 0.01; // target per-entry std of the implied table

    void validate() const {
        if (n < 1 || d < 1) throw param_error("EmbeddingSpec: n and d must be >= 1");
        if (init_std < 0.0) throw param_error("EmbeddingSpec: init_std must be >= 0");
    }
};

struct LowRankConfig {
    std::size_t r = 8;
};

struct FrobeniusConfig {
    std::size_t r = 8;
    std::size_t p = 4;
};

struct MemComConfig {
    std::size_t buckets = 0; // 0: default to ceil(sqrt(n))
};

struct TTConfig {
    std::vector<std::size_t> row_factors; // n_1..n_K, product >= n
    std::vector<std::size_t> col_factors; // d_1..d_K, product == d
    std::vector<std::size_t> ranks;       // r_0..r_K, r_0 == r_K == 1
};

using LayerConfig =
    std::variant<std::monostate, LowRankConfig, FrobeniusConfig, MemComConfig, TTConfig>;

// Gradient for a parameter whose rows are gathered: only the listed rows are
// nonzero. Rows are sorted, unique, with duplicate-index contributions summed.
template <class T>
struct SparseRows {
    std::vector<std::size_t> rows;
    Mat<T> values; // rows.size() x param.cols
};

template <class T>
using GradSlot = std::variant<Mat<T>, SparseRows<T>>;

// One slot per parameter matrix, in params() order.
template <class T>
struct ParamGrads {
    LayerKind kind = LayerKind::native;
    std::vector<GradSlot<T>> slots;
};

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

inline std::size_t ceil_sqrt(std::size_t n) {
    auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    while (m > 1 && (m - 1) * (m - 1) >= n) --m;
    while (m * m < n) ++m;
    return m;
}

template <class T>
class EmbeddingLayer {
public:
    virtual ~EmbeddingLayer() = default;

    virtual LayerKind kind() const = 0;
    const EmbeddingSpec& spec() const { return spec_; }

    // Closed-form parameter count; param_bytes assumes 32-bit storage.
    virtual std::size_t param_count() const = 0;
    std::size_t param_bytes() const { return param_count() * 4; }

    // serialized footprint; compressed layers override with their true size
    virtual std::size_t stored_bytes() const { return param_count() * 4; }

    virtual std::vector<Mat<T>*> params() = 0;
    std::vector<const Mat<T>*> params() const {
        auto mut = const_cast<EmbeddingLayer*>(this)->params();
        return {mut.begin(), mut.end()};
    }

    // Batch gather: writes idx.size() rows of d entries; out_stride is the
    // distance between consecutive output rows.
    virtual void lookup_into(std::span<const std::uint32_t> idx, T* out,
                             std::size_t out_stride) const = 0;

    Mat<T> lookup(std::span<const std::uint32_t> idx) const {
        Mat<T> out(idx.size(), spec_.d);
        lookup_into(idx, out.data.data(), spec_.d);
        return out;
    }

    // Independent naive evaluation of the defining equation, explicit loops,
    // 64-bit accumulation. Oracle path; not used by lookup.
    virtual std::vector<double> reconstruct_row(std::size_t i) const = 0;

    // Gradients of sum_b <upstream[b], row_{idx[b]}> w.r.t. every parameter.
    virtual ParamGrads<T> grad(std::span<const std::uint32_t> idx,
                               const Mat<T>& upstream) const = 0;

protected:
    EmbeddingSpec spec_;

    void check_index(std::size_t i) const {
        if (i >= spec_.n)
            throw index_error("row index " + std::to_string(i) + " out of range [0, " +
                              std::to_string(spec_.n) + ")");
    }

    void check_upstream(std::span<const std::uint32_t> idx, const Mat<T>& up) const {
        if (up.rows != idx.size() || up.cols != spec_.d)
            throw shape_error("upstream must be " + std::to_string(idx.size()) + "x" +
                              std::to_string(spec_.d));
    }
};

namespace detail {

// Coalesce duplicate indices: sorted unique ids with per-id slots summed later.
inline std::vector<std::size_t> sorted_unique(std::span<const std::uint32_t> idx) {
    std::vector<std::size_t> out(idx.begin(), idx.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::size_t find_sorted(const std::vector<std::size_t>& v, std::size_t key) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), key) - v.begin());
}

} // namespace detail

// Factor std so the implied row entries have variance init_std^2:
//   product of `factors` independent N(0, s^2) terms summed over `terms`
//   uncorrelated products gives variance terms * s^(2*factors).
inline double init_factor_std(double target_std, std::size_t factors, std::size_t terms) {
    const double var = target_std * target_std;
    if (var == 0.0) return 0.0;
    return std::pow(var / static_cast<double>(terms), 1.0 / (2.0 * static_cast<double>(factors)));
}

template <class T>
class NativeLayer final : public EmbeddingLayer<T> {
public:
    NativeLayer(const EmbeddingSpec& spec, Rng& rng) {
        spec.validate();
        this->spec_ = spec;
        table_ = rng_normal<T>(rng, spec.n, spec.d, 0.0, spec.init_std);
    }

    LayerKind kind() const override { return LayerKind::native; }
    std::size_t param_count() const override { return this->spec_.n * this->spec_.d; }
    std::vector<Mat<T>*> params() override { return {&table_}; }

    void lookup_into(std::span<const std::uint32_t> idx, T* out,
                     std::size_t out_stride) const override {
        const std::size_t d = this->spec_.d;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            this->check_index(idx[b]);
            const T* src = table_.row_ptr(idx[b]);
            std::copy(src, src + d, out + b * out_stride);
        }
    }

    std::vector<double> reconstruct_row(std::size_t i) const override {
        this->check_index(i);
        std::vector<double> row(this->spec_.d);
        for (std::size_t j = 0; j < this->spec_.d; ++j) row[j] = table_(i, j);
        return row;
    }

    ParamGrads<T> grad(std::span<const std::uint32_t> idx, const Mat<T>& up) const override {
        this->check_upstream(idx, up);
        for (auto i : idx) this->check_index(i);
        auto rows = detail::sorted_unique(idx);
        SparseRows<T> g{rows, Mat<T>(rows.size(), this->spec_.d)};
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::size_t slot = detail::find_sorted(rows, idx[b]);
            for (std::size_t j = 0; j < this->spec_.d; ++j) g.values(slot, j) += up(b, j);
        }
        return {kind(), {GradSlot<T>(std::move(g))}};
    }

    const Mat<T>& table() const { return table_; }

private:
    Mat<T> table_;
};

template <class T>
class LowRankLayer final : public EmbeddingLayer<T> {
public:
    LowRankLayer(const EmbeddingSpec& spec, const LowRankConfig& cfg, Rng& rng) : cfg_(cfg) {
        spec.validate();
        if (cfg.r < 1) throw config_error("lowrank: r must be >= 1");
        this->spec_ = spec;
        const double sf = init_factor_std(spec.init_std, 2, cfg.r);
        a_ = rng_normal<T>(rng, spec.n, cfg.r, 0.0, sf);
        b_ = rng_normal<T>(rng, cfg.r, spec.d, 0.0, sf);
    }

    LayerKind kind() const override { return LayerKind::lowrank; }
    std::size_t param_count() const override {
        return this->spec_.n * cfg_.r + cfg_.r * this->spec_.d;
    }
    std::vector<Mat<T>*> params() override { return {&a_, &b_}; }
    const LowRankConfig& config() const { return cfg_; }

    void lookup_into(std::span<const std::uint32_t> idx, T* out,
                     std::size_t out_stride) const override {
        const std::size_t d = this->spec_.d, r = cfg_.r;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            this->check_index(idx[b]);
            const T* arow = a_.row_ptr(idx[b]);
            T* dst = out + b * out_stride;
            std::fill(dst, dst + d, T(0));
            for (std::size_t c = 0; c < r; ++c) {
                const T ac = arow[c];
                const T* brow = b_.row_ptr(c);
                for (std::size_t j = 0; j < d; ++j) dst[j] += ac * brow[j];
            }
        }
    }

    std::vector<double> reconstruct_row(std::size_t i) const override {
        this->check_index(i);
        std::vector<double> row(this->spec_.d, 0.0);
        for (std::size_t j = 0; j < this->spec_.d; ++j)
            for (std::size_t c = 0; c < cfg_.r; ++c)
                row[j] += static_cast<double>(a_(i, c)) * static_cast<double>(b_(c, j));
        return row;
    }

    ParamGrads<T> grad(std::span<const std::uint32_t> idx, const Mat<T>& up) const override {
        this->check_upstream(idx, up);
        for (auto i : idx) this->check_index(i);
        auto rows = detail::sorted_unique(idx);
        SparseRows<T> da{rows, Mat<T>(rows.size(), cfg_.r)};
        Mat<T> db(cfg_.r, this->spec_.d);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::size_t slot = detail::find_sorted(rows, idx[b]);
            const T* arow = a_.row_ptr(idx[b]);
            for (std::size_t c = 0; c < cfg_.r; ++c) {
                T acc = T(0);
                const T* brow = b_.row_ptr(c);
                T* dbrow = db.row_ptr(c);
                for (std::size_t j = 0; j < this->spec_.d; ++j) {
                    acc += brow[j] * up(b, j);
                    dbrow[j] += arow[c] * up(b, j);
                }
                da.values(slot, c) += acc;
            }
        }
        return {kind(), {GradSlot<T>(std::move(da)), GradSlot<T>(std::move(db))}};
    }

private:
    LowRankConfig cfg_;
    Mat<T> a_, b_;
};

template <class T>
class QuotientRemainderLayer final : public EmbeddingLayer<T> {
public:
    QuotientRemainderLayer(const EmbeddingSpec& spec, Rng& rng) {
        spec.validate();
        this->spec_ = spec;
        m_ = ceil_sqrt(spec.n);
        const double sf = init_factor_std(spec.init_std, 2, 1);
        q_ = rng_normal<T>(rng, ceil_div(spec.n, m_), spec.d, 0.0, sf);
        r_ = rng_normal<T>(rng, m_, spec.d, 0.0, sf);
    }

    LayerKind kind() const override { return LayerKind::quotient_remainder; }
    std::size_t param_count() const override { return (q_.rows + r_.rows) * this->spec_.d; }
    std::vector<Mat<T>*> params() override { return {&q_, &r_}; }
    std::size_t modulus() const { return m_; }

    void lookup_into(std::span<const std::uint32_t> idx, T* out,
                     std::size_t out_stride) const override {
        const std::size_t d = this->spec_.d;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            this->check_index(idx[b]);
            const T* qrow = q_.row_ptr(idx[b] / m_);
            const T* rrow = r_.row_ptr(idx[b] % m_);
            T* dst = out + b * out_stride;
            for (std::size_t j = 0; j < d; ++j) dst[j] = qrow[j] * rrow[j];
        }
    }

    std::vector<double> reconstruct_row(std::size_t i) const override {
        this->check_index(i);
        std::vector<double> row(this->spec_.d);
        for (std::size_t j = 0; j < this->spec_.d; ++j)
            row[j] = static_cast<double>(q_(i / m_, j)) * static_cast<double>(r_(i % m_, j));
        return row;
    }

    ParamGrads<T> grad(std::span<const std::uint32_t> idx, const Mat<T>& up) const override {
        this->check_upstream(idx, up);
        for (auto i : idx) this->check_index(i);
        Mat<T> dq(q_.rows, q_.cols), dr(r_.rows, r_.cols);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::size_t qi = idx[b] / m_, ri = idx[b] % m_;
            for (std::size_t j = 0; j < this->spec_.d; ++j) {
                dq(qi, j) += up(b, j) * r_(ri, j);
                dr(ri, j) += up(b, j) * q_(qi, j);
            }
        }
        return {kind(), {GradSlot<T>(std::move(dq)), GradSlot<T>(std::move(dr))}};
    }

private:
    std::size_t m_ = 0;
    Mat<T> q_, r_;
};

template <class T>
class MemComLayer final : public EmbeddingLayer<T> {
public:
    MemComLayer(const EmbeddingSpec& spec, const MemComConfig& cfg, Rng& rng) : cfg_(cfg) {
        spec.validate();
        if (cfg_.buckets == 0) cfg_.buckets = ceil_sqrt(spec.n);
        this->spec_ = spec;
        const double sf = init_factor_std(spec.init_std, 2, 1);
        scale_ = rng_normal<T>(rng, spec.n, 1, 0.0, sf);
        table_ = rng_normal<T>(rng, cfg_.buckets, spec.d, 0.0, sf);
    }

    LayerKind kind() const override { return LayerKind::memcom; }
    std::size_t param_count() const override {
        return this->spec_.n + cfg_.buckets * this->spec_.d;
    }
    std::vector<Mat<T>*> params() override { return {&scale_, &table_}; }
    const MemComConfig& config() const { return cfg_; }

    void lookup_into(std::span<const std::uint32_t> idx, T* out,
                     std::size_t out_stride) const override {
        const std::size_t d = this->spec_.d;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            this->check_index(idx[b]);
            const T s = scale_(idx[b], 0);
            const T* mrow = table_.row_ptr(idx[b] % cfg_.buckets);
            T* dst = out + b * out_stride;
            for (std::size_t j = 0; j < d; ++j) dst[j] = s * mrow[j];
        }
    }

    std::vector<double> reconstruct_row(std::size_t i) const override {
        this->check_index(i);
        std::vector<double> row(this->spec_.d);
        for (std::size_t j = 0; j < this->spec_.d; ++j)
            row[j] = static_cast<double>(scale_(i, 0)) *
                     static_cast<double>(table_(i % cfg_.buckets, j));
        return row;
    }

    ParamGrads<T> grad(std::span<const std::uint32_t> idx, const Mat<T>& up) const override {
        this->check_upstream(idx, up);
        for (auto i : idx) this->check_index(i);
        auto rows = detail::sorted_unique(idx);
        SparseRows<T> ds{rows, Mat<T>(rows.size(), 1)};
        Mat<T> dm(table_.rows, table_.cols);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::size_t slot = detail::find_sorted(rows, idx[b]);
            const std::size_t bucket = idx[b] % cfg_.buckets;
            const T s = scale_(idx[b], 0);
            T acc = T(0);
            for (std::size_t j = 0; j < this->spec_.d; ++j) {
                acc += up(b, j) * table_(bucket, j);
                dm(bucket, j) += s * up(b, j);
            }
            ds.values(slot, 0) += acc;
        }
        return {kind(), {GradSlot<T>(std::move(ds)), GradSlot<T>(std::move(dm))}};
    }

private:
    MemComConfig cfg_;
    Mat<T> scale_; // n x 1
    Mat<T> table_; // buckets x d
};

template <class T>
class TensorTrainLayer final : public EmbeddingLayer<T> {
public:
    TensorTrainLayer(const EmbeddingSpec& spec, const TTConfig& cfg, Rng& rng) : cfg_(cfg) {
        spec.validate();
        validate_config(spec, cfg);
        this->spec_ = spec;
        const std::size_t K = cfg.row_factors.size();
        std::size_t paths = 1;
        for (std::size_t k = 1; k < K; ++k) paths *= cfg.ranks[k];
        const double sf = init_factor_std(spec.init_std, K, paths);
        cores_.reserve(K);
        for (std::size_t k = 0; k < K; ++k)
            cores_.push_back(rng_normal<T>(rng, cfg.row_factors[k] * cfg.ranks[k],
                                           cfg.col_factors[k] * cfg.ranks[k + 1], 0.0, sf));
    }

    static void validate_config(const EmbeddingSpec& spec, const TTConfig& cfg) {
        const std::size_t K = cfg.row_factors.size();
        if (K == 0 || cfg.col_factors.size() != K || cfg.ranks.size() != K + 1)
            throw config_error("tensor_train: need K row factors, K col factors, K+1 ranks");
        if (cfg.ranks.front() != 1 || cfg.ranks.back() != 1)
            throw config_error("tensor_train: boundary ranks must be 1");
        std::size_t np = 1, dp = 1;
        for (std::size_t k = 0; k < K; ++k) {
            if (cfg.row_factors[k] < 1 || cfg.col_factors[k] < 1 || cfg.ranks[k + 1] < 1)
                throw config_error("tensor_train: factors and ranks must be >= 1");
            np *= cfg.row_factors[k];
            dp *= cfg.col_factors[k];
        }
        if (dp != spec.d)
            throw config_error("tensor_train: product of col_factors " + std::to_string(dp) +
                               " != d " + std::to_string(spec.d));
        if (np < spec.n)
            throw config_error("tensor_train: product of row_factors " + std::to_string(np) +
                               " < n " + std::to_string(spec.n));
    }

    LayerKind kind() const override { return LayerKind::tensor_train; }

    std::size_t param_count() const override {
        std::size_t total = 0;
        for (const auto& c : cores_) total += c.size();
        return total;
    }

    std::vector<Mat<T>*> params() override {
        std::vector<Mat<T>*> out;
        for (auto& c : cores_) out.push_back(&c);
        return out;
    }

    const TTConfig& config() const { return cfg_; }

    // Mixed-radix digits of i over row_factors, most significant first:
    // i = ((i_1 * n_2) + i_2) * n_3 + i_3 ...
    std::vector<std::size_t> digits(std::size_t i) const {
        const std::size_t K = cfg_.row_factors.size();
        std::vector<std::size_t> out(K);
        for (std::size_t k = K; k-- > 0;) {
            out[k] = i % cfg_.row_factors[k];
            i /= cfg_.row_factors[k];
        }
        return out;
    }

    void lookup_into(std::span<const std::uint32_t> idx, T* out,
                     std::size_t out_stride) const override {
        const std::size_t K = cfg_.row_factors.size();
        std::vector<T> cur, next;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            this->check_index(idx[b]);
            const auto dig = digits(idx[b]);
            // cur holds the running product, D x r_k flattened row-major;
            // a D x (d*r) product buffer re-reads as (D*d) x r with no copy.
            const Mat<T>& c0 = cores_[0];
            cur.assign(c0.row_ptr(dig[0]), c0.row_ptr(dig[0]) + c0.cols);
            std::size_t drows = cfg_.col_factors[0];
            for (std::size_t k = 1; k < K; ++k) {
                const Mat<T>& ck = cores_[k];
                const std::size_t rk_prev = cfg_.ranks[k];
                const std::size_t wide = ck.cols; // d_k * r_{k+1}
                next.assign(drows * wide, T(0));
                const T* slice = ck.row_ptr(dig[k] * rk_prev);
                for (std::size_t row = 0; row < drows; ++row) {
                    const T* crow = cur.data() + row * rk_prev;
                    T* nrow = next.data() + row * wide;
                    for (std::size_t g = 0; g < rk_prev; ++g) {
                        const T cv = crow[g];
                        if (cv == T(0)) continue;
                        const T* srow = slice + g * wide;
                        for (std::size_t j = 0; j < wide; ++j) nrow[j] += cv * srow[j];
                    }
                }
                cur.swap(next);
                drows *= cfg_.col_factors[k];
            }
            std::copy(cur.begin(), cur.end(), out + b * out_stride);
        }
    }

    std::vector<double> reconstruct_row(std::size_t i) const override {
        this->check_index(i);
        const std::size_t K = cfg_.row_factors.size();
        const auto dig = digits(i);
        std::vector<double> row(this->spec_.d);
        std::vector<std::size_t> jdig(K, 0);
        for (std::size_t j = 0; j < this->spec_.d; ++j) {
            std::size_t rem = j;
            for (std::size_t k = K; k-- > 0;) {
                jdig[k] = rem % cfg_.col_factors[k];
                rem /= cfg_.col_factors[k];
            }
            // rank-path contraction, one scalar at a time
            std::vector<double> v{1.0};
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t rprev = cfg_.ranks[k], rnext = cfg_.ranks[k + 1];
                std::vector<double> w(rnext, 0.0);
                for (std::size_t g1 = 0; g1 < rprev; ++g1)
                    for (std::size_t g2 = 0; g2 < rnext; ++g2)
                        w[g2] += v[g1] * static_cast<double>(cores_[k](
                                             dig[k] * rprev + g1, jdig[k] * rnext + g2));
                v.swap(w);
            }
            row[j] = v[0];
        }
        return row;
    }

    ParamGrads<T> grad(std::span<const std::uint32_t> idx, const Mat<T>& up) const override {
        this->check_upstream(idx, up);
        for (auto i : idx) this->check_index(i);
        const std::size_t K = cfg_.row_factors.size();
        std::vector<GradSlot<T>> slots;
        slots.reserve(K);
        std::vector<Mat<T>*> gcore;
        for (std::size_t k = 0; k < K; ++k) {
            slots.emplace_back(Mat<T>(cores_[k].rows, cores_[k].cols));
            gcore.push_back(&std::get<Mat<T>>(slots[k]));
        }
        std::vector<std::vector<T>> fwd(K); // fwd[k]: D_k x r_{k+1} flattened
        std::vector<T> dcur, dnext;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const auto dig = digits(idx[b]);
            // forward pass, keeping every partial product
            const Mat<T>& c0 = cores_[0];
            fwd[0].assign(c0.row_ptr(dig[0]), c0.row_ptr(dig[0]) + c0.cols);
            std::size_t drows = cfg_.col_factors[0];
            std::vector<std::size_t> dims{drows};
            for (std::size_t k = 1; k < K; ++k) {
                const Mat<T>& ck = cores_[k];
                const std::size_t rk = cfg_.ranks[k];
                const std::size_t wide = ck.cols;
                fwd[k].assign(drows * wide, T(0));
                const T* slice = ck.row_ptr(dig[k] * rk);
                for (std::size_t row = 0; row < drows; ++row) {
                    const T* crow = fwd[k - 1].data() + row * rk;
                    T* nrow = fwd[k].data() + row * wide;
                    for (std::size_t g = 0; g < rk; ++g) {
                        const T cv = crow[g];
                        if (cv == T(0)) continue;
                        const T* srow = slice + g * wide;
                        for (std::size_t j = 0; j < wide; ++j) nrow[j] += cv * srow[j];
                    }
                }
                drows *= cfg_.col_factors[k];
                dims.push_back(drows);
            }
            // backward through the chain
            dcur.assign(up.row_ptr(b), up.row_ptr(b) + this->spec_.d); // d x 1
            for (std::size_t k = K; k-- > 1;) {
                const Mat<T>& ck = cores_[k];
                const std::size_t rk = cfg_.ranks[k];
                const std::size_t wide = ck.cols;
                const std::size_t dprev = dims[k - 1];
                // dcur viewed as dprev x wide; prev partial as dprev x rk
                T* gs = gcore[k]->row_ptr(dig[k] * rk);
                const T* slice = ck.row_ptr(dig[k] * rk);
                dnext.assign(dprev * rk, T(0));
                for (std::size_t row = 0; row < dprev; ++row) {
                    const T* prow = fwd[k - 1].data() + row * rk;
                    const T* drow = dcur.data() + row * wide;
                    T* nrow = dnext.data() + row * rk;
                    for (std::size_t g = 0; g < rk; ++g) {
                        const T pv = prow[g];
                        T acc = T(0);
                        const T* srow = slice + g * wide;
                        T* grow = gs + g * wide;
                        for (std::size_t j = 0; j < wide; ++j) {
                            grow[j] += pv * drow[j];
                            acc += srow[j] * drow[j];
                        }
                        nrow[g] = acc;
                    }
                }
                dcur.swap(dnext);
            }
            T* g0 = gcore[0]->row_ptr(dig[0]);
            for (std::size_t j = 0; j < dcur.size(); ++j) g0[j] += dcur[j];
        }
        return {kind(), std::move(slots)};
    }

private:
    TTConfig cfg_;
    std::vector<Mat<T>> cores_; // core k: (n_k * r_k) x (d_k * r_{k+1})
};

template <class T>
class FrobeniusLayer final : public EmbeddingLayer<T> {
public:
    FrobeniusLayer(const EmbeddingSpec& spec, const FrobeniusConfig& cfg, Rng& rng) : cfg_(cfg) {
        spec.validate();
        if (cfg.r < 1 || cfg.p < 1) throw config_error("frobenius: r and p must be >= 1");
        this->spec_ = spec;
        m_ = ceil_sqrt(spec.n);
        const std::size_t nq = ceil_div(spec.n, m_);
        const double sf = init_factor_std(spec.init_std, 3, cfg.p * cfg.r);
        for (std::size_t j = 0; j < cfg.p; ++j) {
            a_.push_back(rng_normal<T>(rng, nq, cfg.r, 0.0, sf));
            b_.push_back(rng_normal<T>(rng, m_, cfg.r, 0.0, sf));
            w_.push_back(rng_normal<T>(rng, cfg.r, spec.d, 0.0, sf));
        }
    }

    LayerKind kind() const override { return LayerKind::frobenius; }

    std::size_t param_count() const override {
        const std::size_t nq = ceil_div(this->spec_.n, m_);
        return cfg_.p * (nq * cfg_.r + m_ * cfg_.r + cfg_.r * this->spec_.d);
    }

    std::vector<Mat<T>*> params() override {
        std::vector<Mat<T>*> out;
        for (std::size_t j = 0; j < cfg_.p; ++j) {
            out.push_back(&a_[j]);
            out.push_back(&b_[j]);
            out.push_back(&w_[j]);
        }
        return out;
    }

    const FrobeniusConfig& config() const { return cfg_; }
    std::size_t modulus() const { return m_; }

    void lookup_into(std::span<const std::uint32_t> idx, T* out,
                     std::size_t out_stride) const override {
        const std::size_t d = this->spec_.d, r = cfg_.r;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            this->check_index(idx[b]);
            const std::size_t q = idx[b] / m_, t = idx[b] % m_;
            T* dst = out + b * out_stride;
            std::fill(dst, dst + d, T(0));
            for (std::size_t j = 0; j < cfg_.p; ++j) {
                const T* arow = a_[j].row_ptr(q);
                const T* brow = b_[j].row_ptr(t);
                for (std::size_t c = 0; c < r; ++c) {
                    const T h = arow[c] * brow[c];
                    if (h == T(0)) continue;
                    const T* wrow = w_[j].row_ptr(c);
                    for (std::size_t col = 0; col < d; ++col) dst[col] += h * wrow[col];
                }
            }
        }
    }

    std::vector<double> reconstruct_row(std::size_t i) const override {
        this->check_index(i);
        const std::size_t q = i / m_, t = i % m_;
        std::vector<double> row(this->spec_.d, 0.0);
        for (std::size_t j = 0; j < cfg_.p; ++j)
            for (std::size_t col = 0; col < this->spec_.d; ++col)
                for (std::size_t c = 0; c < cfg_.r; ++c)
                    row[col] += static_cast<double>(a_[j](q, c)) *
                                static_cast<double>(b_[j](t, c)) *
                                static_cast<double>(w_[j](c, col));
        return row;
    }

    ParamGrads<T> grad(std::span<const std::uint32_t> idx, const Mat<T>& up) const override {
        this->check_upstream(idx, up);
        for (auto i : idx) this->check_index(i);
        std::vector<GradSlot<T>> slots;
        slots.reserve(3 * cfg_.p);
        for (std::size_t j = 0; j < cfg_.p; ++j) {
            slots.emplace_back(Mat<T>(a_[j].rows, a_[j].cols));
            slots.emplace_back(Mat<T>(b_[j].rows, b_[j].cols));
            slots.emplace_back(Mat<T>(w_[j].rows, w_[j].cols));
        }
        const std::size_t d = this->spec_.d, r = cfg_.r;
        std::vector<T> h(r), dh(r);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::size_t q = idx[b] / m_, t = idx[b] % m_;
            const T* urow = up.row_ptr(b);
            for (std::size_t j = 0; j < cfg_.p; ++j) {
                auto& da = std::get<Mat<T>>(slots[3 * j]);
                auto& db = std::get<Mat<T>>(slots[3 * j + 1]);
                auto& dw = std::get<Mat<T>>(slots[3 * j + 2]);
                const T* arow = a_[j].row_ptr(q);
                const T* brow = b_[j].row_ptr(t);
                for (std::size_t c = 0; c < r; ++c) {
                    h[c] = arow[c] * brow[c];
                    const T* wrow = w_[j].row_ptr(c);
                    T acc = T(0);
                    T* dwrow = dw.row_ptr(c);
                    for (std::size_t col = 0; col < d; ++col) {
                        acc += wrow[col] * urow[col];
                        dwrow[col] += h[c] * urow[col];
                    }
                    dh[c] = acc;
                }
                for (std::size_t c = 0; c < r; ++c) {
                    da(q, c) += dh[c] * brow[c];
                    db(t, c) += dh[c] * arow[c];
                }
            }
        }
        return {kind(), std::move(slots)};
    }

private:
    FrobeniusConfig cfg_;
    std::size_t m_ = 0;
    std::vector<Mat<T>> a_, b_, w_;
};

template <class T>
std::unique_ptr<EmbeddingLayer<T>> build_layer(LayerKind kind, const EmbeddingSpec& spec,
                                               const LayerConfig& config, Rng& rng) {
    switch (kind) {
        case LayerKind::native:
            return std::make_unique<NativeLayer<T>>(spec, rng);
        case LayerKind::lowrank:
            if (auto* c = std::get_if<LowRankConfig>(&config))
                return std::make_unique<LowRankLayer<T>>(spec, *c, rng);
            break;
        case LayerKind::quotient_remainder:
            return std::make_unique<QuotientRemainderLayer<T>>(spec, rng);
        case LayerKind::memcom:
            if (auto* c = std::get_if<MemComConfig>(&config))
                return std::make_unique<MemComLayer<T>>(spec, *c, rng);
            break;
        case LayerKind::tensor_train:
            if (auto* c = std::get_if<TTConfig>(&config))
                return std::make_unique<TensorTrainLayer<T>>(spec, *c, rng);
            break;
        case LayerKind::frobenius:
            if (auto* c = std::get_if<FrobeniusConfig>(&config))
                return std::make_unique<FrobeniusLayer<T>>(spec, *c, rng);
            break;
    }
    throw config_error(std::string("build_layer: config does not match kind ") + kind_name(kind));
}

// Balanced TT factorization helper: K row factors with product >= n, K col
// factors with product == d, inner ranks all equal to `rank`.
inline TTConfig tt_auto_config(std::size_t n, std::size_t d, std::size_t rank,
                               std::size_t K = 3) {
    if (K < 1) throw config_error("tt_auto_config: K must be >= 1");
    TTConfig cfg;
    std::size_t rem = n;
    for (std::size_t k = 0; k < K; ++k) {
        const auto left = static_cast<double>(K - k);
        auto f = static_cast<std::size_t>(
            std::ceil(std::pow(static_cast<double>(rem), 1.0 / left)));
        f = std::max<std::size_t>(f, 1);
        cfg.row_factors.push_back(f);
        rem = ceil_div(rem, f);
    }
    // col factors: exact factorization of d minimizing the largest factor
    std::vector<std::size_t> best;
    std::vector<std::size_t> cur;
    std::size_t best_max = d + 1;
    auto rec = [&](auto&& self, std::size_t remaining, std::size_t slots, std::size_t lo) -> void {
        if (slots == 1) {
            if (remaining < lo) return;
            std::size_t mx = std::max(remaining, cur.empty() ? std::size_t{1}
                                                             : *std::max_element(cur.begin(), cur.end()));
            if (mx < best_max) {
                best = cur;
                best.push_back(remaining);
                best_max = mx;
            }
            return;
        }
        for (std::size_t f = lo; f * f <= remaining * remaining; ++f) {
            if (f > remaining) break;
            if (remaining % f != 0) continue;
            cur.push_back(f);
            self(self, remaining / f, slots - 1, f);
            cur.pop_back();
        }
    };
    rec(rec, d, K, 1);
    std::sort(best.rbegin(), best.rend());
    cfg.col_factors = best;
    cfg.ranks.assign(K + 1, rank);
    cfg.ranks.front() = cfg.ranks.back() = 1;
    return cfg;
}

} // namespace cemb
