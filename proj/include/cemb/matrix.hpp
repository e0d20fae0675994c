// matrix.hpp
// Dense row-major matrices and the contractions the layers build on.
// Rows are contiguous: embedding lookup is a row gather.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cemb/error.hpp"

namespace cemb {

template <class T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data; // rows * cols, row-major

    Mat() = default;
    Mat(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    T* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const T* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return rows * cols; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <class U>
    Mat<U> cast() const {
        Mat<U> out(rows, cols);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    bool operator==(const Mat& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

namespace detail {
inline std::string shape_str(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}
} // namespace detail

// C = A * B
template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
    if (a.cols != b.rows)
        throw shape_error("matmul: " + detail::shape_str(a.rows, a.cols) + " * " +
                          detail::shape_str(b.rows, b.cols));
    Mat<T> c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const T* arow = a.row_ptr(i);
        T* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            if (aik == T(0)) continue;
            const T* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// C = A^T * B  (A is k x m, B is k x n, C is m x n)
template <class T>
Mat<T> matmul_tn(const Mat<T>& a, const Mat<T>& b) {
    if (a.rows != b.rows)
        throw shape_error("matmul_tn: " + detail::shape_str(a.rows, a.cols) + " vs " +
                          detail::shape_str(b.rows, b.cols));
    Mat<T> c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const T* arow = a.row_ptr(k);
        const T* brow = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const T aki = arow[i];
            if (aki == T(0)) continue;
            T* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

// C = A * B^T  (A is m x k, B is n x k, C is m x n)
template <class T>
Mat<T> matmul_nt(const Mat<T>& a, const Mat<T>& b) {
    if (a.cols != b.cols)
        throw shape_error("matmul_nt: " + detail::shape_str(a.rows, a.cols) + " vs " +
                          detail::shape_str(b.rows, b.cols));
    Mat<T> c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const T* arow = a.row_ptr(i);
        T* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const T* brow = b.row_ptr(j);
            T acc = T(0);
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

template <class T>
double frobenius_norm(const Mat<T>& a) {
    double acc = 0.0;
    for (T v : a.data) acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

} // namespace cemb
