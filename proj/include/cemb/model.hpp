// model.hpp
// Small click-through-rate style net: dense features and one embedding row
// per categorical field are concatenated, then passed through two ReLU
// hidden layers to a single logit. Templated on scalar type so the whole
// forward/backward path can run in 64-bit for finite-difference checks.

#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/layers.hpp"
#include "cemb/matrix.hpp"
#include "cemb/metrics.hpp"
#include "cemb/optim.hpp"
#include "cemb/rng.hpp"

namespace cemb {

template <class T>
struct Batch {
    Mat<T> dense;                                 // B x n_dense
    std::vector<std::vector<std::uint32_t>> idx;  // one id vector per table, length B
    std::vector<float> labels;                    // B

    std::size_t size() const { return labels.size(); }
};

template <class T>
struct ModelGrads {
    std::vector<Mat<T>> mlp;              // dW1, db1, dW2, db2, dW3, db3
    std::vector<ParamGrads<T>> tables;
};

struct MlpConfig {
    std::size_t hidden1 = 64;
    std::size_t hidden2 = 32;

    void validate() const {
        if (hidden1 < 1 || hidden2 < 1) throw param_error("hidden sizes must be >= 1");
    }
};

template <class T>
struct ModelOptState {
    OptState<T> mlp;
    std::vector<OptState<T>> tables;
};

template <class T>
class MiniCtrModel {
public:
    MiniCtrModel(std::size_t n_dense, MlpConfig cfg,
                 std::vector<std::unique_ptr<EmbeddingLayer<T>>> tables, Rng& rng)
        : n_dense_(n_dense), cfg_(cfg), tables_(std::move(tables)) {
        cfg_.validate();
        std::size_t in = n_dense_;
        for (const auto& t : tables_) in += t->spec().d;
        in_dim_ = in;
        // He-scaled init for the ReLU stack, zero biases
        w1_ = rng_normal<T>(rng, in, cfg_.hidden1, 0.0, std::sqrt(2.0 / static_cast<double>(in)));
        b1_ = Mat<T>(1, cfg_.hidden1);
        w2_ = rng_normal<T>(rng, cfg_.hidden1, cfg_.hidden2, 0.0,
                            std::sqrt(2.0 / static_cast<double>(cfg_.hidden1)));
        b2_ = Mat<T>(1, cfg_.hidden2);
        w3_ = rng_normal<T>(rng, cfg_.hidden2, 1, 0.0,
                            std::sqrt(2.0 / static_cast<double>(cfg_.hidden2)));
        b3_ = Mat<T>(1, 1);
    }

    std::size_t n_dense() const { return n_dense_; }
    std::size_t input_dim() const { return in_dim_; }
    const MlpConfig& mlp_config() const { return cfg_; }
    std::size_t table_count() const { return tables_.size(); }
    EmbeddingLayer<T>& table(std::size_t t) { return *tables_[t]; }
    const EmbeddingLayer<T>& table(std::size_t t) const { return *tables_[t]; }

    std::vector<Mat<T>*> mlp_params() { return {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_}; }

    // every trainable matrix, tables first then MLP
    std::vector<Mat<T>*> all_params() {
        std::vector<Mat<T>*> out;
        for (auto& t : tables_)
            for (auto* p : t->params()) out.push_back(p);
        for (auto* p : mlp_params()) out.push_back(p);
        return out;
    }

    std::size_t embedding_param_count() const {
        std::size_t total = 0;
        for (const auto& t : tables_) total += t->param_count();
        return total;
    }

    std::size_t embedding_param_bytes() const {
        std::size_t total = 0;
        for (const auto& t : tables_) total += t->stored_bytes();
        return total;
    }

    std::size_t mlp_param_count() const {
        return w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() + b3_.size();
    }

    void logits(const Batch<T>& batch, std::vector<double>& out) const {
        Cache c;
        forward(batch, c);
        out.assign(c.z.data.begin(), c.z.data.end());
    }

    double batch_loss(const Batch<T>& batch) const {
        Cache c;
        forward(batch, c);
        double total = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b)
            total += bce_loss(static_cast<double>(c.z(b, 0)), batch.labels[b]);
        return total / static_cast<double>(batch.size());
    }

    // gradients of the mean BCE loss over the batch
    double grads(const Batch<T>& batch, ModelGrads<T>& out) const {
        Cache c;
        forward(batch, c);
        const std::size_t B = batch.size();
        const double inv_b = 1.0 / static_cast<double>(B);

        double loss = 0.0;
        Mat<T> dz(B, 1);
        for (std::size_t b = 0; b < B; ++b) {
            const double z = c.z(b, 0);
            loss += bce_loss(z, batch.labels[b]);
            dz(b, 0) = static_cast<T>(bce_grad(z, batch.labels[b]) * inv_b);
        }
        loss *= inv_b;

        Mat<T> dw3 = matmul_tn(c.h2, dz);
        Mat<T> db3 = col_sums(dz);
        Mat<T> dh2 = matmul_nt(dz, w3_);
        relu_backward(c.z2, dh2);
        Mat<T> dw2 = matmul_tn(c.h1, dh2);
        Mat<T> db2 = col_sums(dh2);
        Mat<T> dh1 = matmul_nt(dh2, w2_);
        relu_backward(c.z1, dh1);
        Mat<T> dw1 = matmul_tn(c.x, dh1);
        Mat<T> db1 = col_sums(dh1);
        Mat<T> dx = matmul_nt(dh1, w1_);

        out.mlp.clear();
        out.mlp.push_back(std::move(dw1));
        out.mlp.push_back(std::move(db1));
        out.mlp.push_back(std::move(dw2));
        out.mlp.push_back(std::move(db2));
        out.mlp.push_back(std::move(dw3));
        out.mlp.push_back(std::move(db3));

        out.tables.clear();
        std::size_t col = n_dense_;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
            const std::size_t d = tables_[t]->spec().d;
            Mat<T> up(B, d);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < d; ++j) up(b, j) = dx(b, col + j);
            out.tables.push_back(tables_[t]->grad(batch.idx[t], up));
            col += d;
        }
        return loss;
    }

    void apply(const ModelGrads<T>& g, const OptimizerConfig& opt, ModelOptState<T>& state) {
        auto mlp = mlp_params();
        if (g.mlp.size() != mlp.size() || g.tables.size() != tables_.size())
            throw shape_error("apply: gradient bundle does not match model");
        if (state.tables.size() != tables_.size()) state.tables.resize(tables_.size());
        for (std::size_t i = 0; i < mlp.size(); ++i) {
            Mat<T>& acc = state.mlp.slot(i, mlp[i]->rows, mlp[i]->cols);
            apply_dense(*mlp[i], g.mlp[i], acc, opt);
        }
        for (std::size_t t = 0; t < tables_.size(); ++t)
            apply_grads(*tables_[t], g.tables[t], state.tables[t], opt);
    }

    double train_batch(const Batch<T>& batch, const OptimizerConfig& opt,
                       ModelOptState<T>& state) {
        ModelGrads<T> g;
        const double loss = grads(batch, g);
        apply(g, opt, state);
        return loss;
    }

    // swaps one table for another of the same (n, d); optimizer state for it
    // must be reset by the caller
    void replace_table(std::size_t t, std::unique_ptr<EmbeddingLayer<T>> layer) {
        if (t >= tables_.size()) throw index_error("replace_table: no such table");
        if (layer->spec().n != tables_[t]->spec().n || layer->spec().d != tables_[t]->spec().d)
            throw shape_error("replace_table: shape mismatch");
        tables_[t] = std::move(layer);
    }

private:
    struct Cache {
        Mat<T> x, z1, h1, z2, h2, z;
    };

    void forward(const Batch<T>& batch, Cache& c) const {
        const std::size_t B = batch.size();
        if (batch.dense.rows != B || batch.dense.cols != n_dense_)
            throw shape_error("forward: dense block mismatch");
        if (batch.idx.size() != tables_.size())
            throw shape_error("forward: table count mismatch");

        c.x = Mat<T>(B, in_dim_);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < n_dense_; ++j) c.x(b, j) = batch.dense(b, j);
        std::size_t col = n_dense_;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
            if (batch.idx[t].size() != B) throw shape_error("forward: id column mismatch");
            tables_[t]->lookup_into(batch.idx[t], c.x.data.data() + col, in_dim_);
            col += tables_[t]->spec().d;
        }

        c.z1 = matmul(c.x, w1_);
        add_row(c.z1, b1_);
        c.h1 = c.z1;
        relu(c.h1);
        c.z2 = matmul(c.h1, w2_);
        add_row(c.z2, b2_);
        c.h2 = c.z2;
        relu(c.h2);
        c.z = matmul(c.h2, w3_);
        add_row(c.z, b3_);
    }

    static void relu(Mat<T>& m) {
        for (auto& v : m.data) v = v > T(0) ? v : T(0);
    }

    // zero the positions where the pre-activation was non-positive
    static void relu_backward(const Mat<T>& z, Mat<T>& dz) {
        for (std::size_t i = 0; i < z.size(); ++i)
            if (z.data[i] <= T(0)) dz.data[i] = T(0);
    }

    static void add_row(Mat<T>& m, const Mat<T>& row) {
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c) m(r, c) += row(0, c);
    }

    static Mat<T> col_sums(const Mat<T>& m) {
        Mat<T> out(1, m.cols);
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c) out(0, c) += m(r, c);
        return out;
    }

    std::size_t n_dense_ = 0;
    std::size_t in_dim_ = 0;
    MlpConfig cfg_;
    std::vector<std::unique_ptr<EmbeddingLayer<T>>> tables_;
    Mat<T> w1_, b1_, w2_, b2_, w3_, b3_;
};

} // namespace cemb
