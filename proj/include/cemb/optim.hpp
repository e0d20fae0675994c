// optim.hpp
// SGD and Adagrad steps over layer parameters. Sparse gradient slots update
// only the listed rows; the result is identical to a dense step whose
// unlisted rows carry zero gradient (Adagrad accumulators for untouched rows
// stay untouched, and zero-gradient rows would not move either way).

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/layers.hpp"
#include "cemb/matrix.hpp"

namespace cemb {

enum class Optimizer { sgd, adagrad };

inline const char* optimizer_name(Optimizer o) {
    return o == Optimizer::sgd ? "sgd" : "adagrad";
}

inline Optimizer parse_optimizer(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adagrad") return Optimizer::adagrad;
    throw config_error("unknown optimizer: " + s);
}

struct OptimizerConfig {
    Optimizer kind = Optimizer::adagrad;
    double learning_rate = 0.05;
    double epsilon = 1e-8; // adagrad denominator guard

    void validate() const {
        if (learning_rate <= 0.0) throw param_error("learning_rate must be > 0");
        if (epsilon <= 0.0) throw param_error("epsilon must be > 0");
    }
};

template <class T>
inline void sgd_step(T& w, T g, double lr) {
    w -= static_cast<T>(lr * static_cast<double>(g));
}

template <class T>
inline void adagrad_step(T& w, T g, T& acc, double lr, double eps) {
    acc += g * g;
    w -= static_cast<T>(lr * static_cast<double>(g) /
                        std::sqrt(static_cast<double>(acc) + eps));
}

// Per-parameter squared-gradient accumulators, keyed by params() order.
// Sized lazily on first use so SGD never allocates them.
template <class T>
struct OptState {
    std::vector<Mat<T>> accum;

    Mat<T>& slot(std::size_t i, std::size_t rows, std::size_t cols) {
        if (accum.size() <= i) accum.resize(i + 1);
        if (accum[i].rows != rows || accum[i].cols != cols) accum[i] = Mat<T>(rows, cols);
        return accum[i];
    }
};

template <class T>
inline void apply_dense(Mat<T>& w, const Mat<T>& g, Mat<T>& acc, const OptimizerConfig& opt) {
    if (!w.same_shape(g)) throw shape_error("apply_dense: gradient shape mismatch");
    if (opt.kind == Optimizer::sgd) {
        for (std::size_t i = 0; i < w.size(); ++i) sgd_step(w.data[i], g.data[i], opt.learning_rate);
    } else {
        for (std::size_t i = 0; i < w.size(); ++i)
            adagrad_step(w.data[i], g.data[i], acc.data[i], opt.learning_rate, opt.epsilon);
    }
}

template <class T>
void apply_grads(EmbeddingLayer<T>& layer, const ParamGrads<T>& grads, OptState<T>& state,
                 const OptimizerConfig& opt) {
    opt.validate();
    auto params = layer.params();
    if (grads.slots.size() != params.size())
        throw shape_error("apply_grads: slot count mismatch");
    for (std::size_t s = 0; s < params.size(); ++s) {
        Mat<T>& w = *params[s];
        if (const auto* dense = std::get_if<Mat<T>>(&grads.slots[s])) {
            if (!w.same_shape(*dense)) throw shape_error("apply_grads: dense shape mismatch");
            if (opt.kind == Optimizer::sgd) {
                for (std::size_t i = 0; i < w.size(); ++i)
                    sgd_step(w.data[i], dense->data[i], opt.learning_rate);
            } else {
                Mat<T>& acc = state.slot(s, w.rows, w.cols);
                for (std::size_t i = 0; i < w.size(); ++i)
                    adagrad_step(w.data[i], dense->data[i], acc.data[i], opt.learning_rate,
                                 opt.epsilon);
            }
        } else {
            const auto& sparse = std::get<SparseRows<T>>(grads.slots[s]);
            if (sparse.values.cols != w.cols || sparse.values.rows != sparse.rows.size())
                throw shape_error("apply_grads: sparse shape mismatch");
            if (opt.kind == Optimizer::sgd) {
                for (std::size_t k = 0; k < sparse.rows.size(); ++k) {
                    T* wrow = w.row_ptr(sparse.rows[k]);
                    const T* grow = sparse.values.row_ptr(k);
                    for (std::size_t j = 0; j < w.cols; ++j)
                        sgd_step(wrow[j], grow[j], opt.learning_rate);
                }
            } else {
                Mat<T>& acc = state.slot(s, w.rows, w.cols);
                for (std::size_t k = 0; k < sparse.rows.size(); ++k) {
                    T* wrow = w.row_ptr(sparse.rows[k]);
                    T* arow = acc.row_ptr(sparse.rows[k]);
                    const T* grow = sparse.values.row_ptr(k);
                    for (std::size_t j = 0; j < w.cols; ++j)
                        adagrad_step(wrow[j], grow[j], arow[j], opt.learning_rate, opt.epsilon);
                }
            }
        }
    }
}

} // namespace cemb
