// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// Small dense linear-algebra kernels used by the attention, encoder and
// training code. Everything is row-major double precision; the checkpoint
// format narrows to float32 on disk.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace kgsr {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// out = M x
inline Vector matvec(const Matrix& m, std::span<const double> x) {
    Vector out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), x);
    return out;
}

// out = M^T g
inline Vector matvec_transposed(const Matrix& m, std::span<const double> g) {
    Vector out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) axpy(g[r], m.row(r), out);
    return out;
}

// M += g x^T
inline void add_outer(Matrix& m, std::span<const double> g, std::span<const double> x) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (g[r] != 0.0) axpy(g[r], x, m.row(r));
    }
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
inline double leaky_relu_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

// Numerically stable softmax; invariant to adding a constant to every input.
inline Vector softmax(std::span<const double> x) {
    Vector out(x.size());
    if (x.empty()) return out;
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

// Given y = softmax(x) and dL/dy, return dL/dx.
inline Vector softmax_backward(std::span<const double> y, std::span<const double> dy) {
    double inner = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) inner += y[i] * dy[i];
    Vector dx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - inner);
    return dx;
}

inline Vector concat(std::initializer_list<std::span<const double>> parts) {
    Vector out;
    for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

}  // namespace kgsr
