#pragma once

#include "ose/errors.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ose {

struct SparseEntry {
    std::size_t row = 0;
    double value = 0.0;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Column-compressed m×n matrix. Within every column row indices are strictly
/// increasing and values are finite and nonzero; the constructor enforces it.
class SparseColMatrix {
public:
    SparseColMatrix() = default;

    /// All-zero m×n matrix.
    SparseColMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), col_ptr_(cols + 1, 0) {}

    SparseColMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
                    std::vector<SparseEntry> entries)
        : rows_(rows), cols_(cols), col_ptr_(std::move(col_ptr)), entries_(std::move(entries)) {
        validate();
    }

    /// Builds column by column; `fill(j, out)` appends column j's entries.
    template <class Fill>
    static SparseColMatrix build(std::size_t rows, std::size_t cols, Fill&& fill) {
        std::vector<std::size_t> ptr(cols + 1, 0);
        std::vector<SparseEntry> entries;
        std::vector<SparseEntry> scratch;
        for (std::size_t j = 0; j < cols; ++j) {
            scratch.clear();
            fill(j, scratch);
            entries.insert(entries.end(), scratch.begin(), scratch.end());
            ptr[j + 1] = entries.size();
        }
        return SparseColMatrix(rows, cols, std::move(ptr), std::move(entries));
    }

    static SparseColMatrix identity(std::size_t n) {
        return build(n, n, [](std::size_t j, std::vector<SparseEntry>& out) { out.push_back({j, 1.0}); });
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return entries_.size(); }

    std::span<const SparseEntry> column(std::size_t j) const noexcept {
        return {entries_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
    }

    /// Entry lookup by binary search; zero when absent.
    double at(std::size_t r, std::size_t j) const noexcept {
        auto col = column(j);
        std::size_t lo = 0;
        std::size_t hi = col.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (col[mid].row < r) lo = mid + 1;
            else hi = mid;
        }
        return (lo < col.size() && col[lo].row == r) ? col[lo].value : 0.0;
    }

    /// Returns a copy with every value multiplied by `factor` (nonzero).
    SparseColMatrix scaled(double factor) const {
        detail::require<InvalidArgument>(factor != 0.0 && std::isfinite(factor), "scaled: factor must be finite and nonzero");
        SparseColMatrix out = *this;
        for (auto& e : out.entries_) e.value *= factor;
        return out;
    }

    friend bool operator==(const SparseColMatrix&, const SparseColMatrix&) = default;

private:
    void validate() const {
        detail::require<DimensionMismatch>(col_ptr_.size() == cols_ + 1, "SparseColMatrix: col_ptr length != cols+1");
        detail::require<DimensionMismatch>(col_ptr_.front() == 0 && col_ptr_.back() == entries_.size(),
                                           "SparseColMatrix: col_ptr does not span entries");
        for (std::size_t j = 0; j < cols_; ++j) {
            detail::require<InvalidArgument>(col_ptr_[j] <= col_ptr_[j + 1], "SparseColMatrix: col_ptr not monotone");
            for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
                const auto& e = entries_[k];
                detail::require<IndexOutOfRange>(e.row < rows_, "SparseColMatrix: row index out of range in column " +
                                                                    std::to_string(j));
                detail::require<InvalidArgument>(std::isfinite(e.value) && e.value != 0.0,
                                                 "SparseColMatrix: zero or non-finite value in column " +
                                                     std::to_string(j));
                detail::require<InvalidArgument>(k == col_ptr_[j] || entries_[k - 1].row < e.row,
                                                 "SparseColMatrix: rows not strictly increasing in column " +
                                                     std::to_string(j));
            }
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> col_ptr_{0};
    std::vector<SparseEntry> entries_;
};

/// Merge-join dot product of two sorted sparse columns.
inline double sparse_dot(std::span<const SparseEntry> a, std::span<const SparseEntry> b) noexcept {
    double acc = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].row < b[j].row) ++i;
        else if (b[j].row < a[i].row) ++j;
        else acc += a[i++].value * b[j++].value;
    }
    return acc;
}

inline double squared_norm(std::span<const SparseEntry> col) noexcept {
    double acc = 0.0;
    for (const auto& e : col) acc += e.value * e.value;
    return acc;
}

/// Row-major view of a sparse matrix: for each row, (column, value) in
/// ascending column order.
struct RowEntry {
    std::size_t col = 0;
    double value = 0.0;
};

inline std::vector<std::vector<RowEntry>> rows_of(const SparseColMatrix& p) {
    std::vector<std::vector<RowEntry>> out(p.rows());
    for (std::size_t j = 0; j < p.cols(); ++j)
        for (const auto& e : p.column(j)) out[e.row].push_back({j, e.value});
    return out;
}

} // namespace ose
