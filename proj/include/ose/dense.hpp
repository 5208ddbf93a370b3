#pragma once

#include "ose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ose {

/// Row-major dense matrix of finite doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        detail::require<DimensionMismatch>(data_.size() == rows_ * cols_,
                                           "DenseMatrix: entries length != rows*cols");
        for (double x : data_) detail::require<InvalidArgument>(std::isfinite(x), "DenseMatrix: non-finite entry");
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix out(n, n);
        for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
        return out;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require<DimensionMismatch>(a.cols() == b.rows(), "multiply: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto src = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
        }
    }
    return out;
}

/// AᵀA without forming the transpose.
inline DenseMatrix gram(const DenseMatrix& a) {
    const std::size_t d = a.cols();
    DenseMatrix out(d, d);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto x = a.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            if (x[i] == 0.0) continue;
            for (std::size_t j = i; j < d; ++j) out(i, j) += x[i] * x[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
    return out;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require<DimensionMismatch>(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
    DenseMatrix out = a;
    auto dst = out.values();
    auto src = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    return out;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require<DimensionMismatch>(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shapes differ");
    double worst = 0.0;
    auto x = a.values();
    auto y = b.values();
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
    return worst;
}

/// ‖AᵀA − I‖_max.
inline double orthonormality_defect(const DenseMatrix& a) {
    return max_abs_diff(gram(a), DenseMatrix::identity(a.cols()));
}

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

} // namespace ose
