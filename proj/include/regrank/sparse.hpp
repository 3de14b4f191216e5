#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "regrank/errors.hpp"

namespace regrank {

struct Triplet {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;
};

// Compressed sparse rows, immutable after construction. The ranking and
// partitioning kernels only ever need y = A x and y = A^T x.
class CsrMatrix {
public:
    CsrMatrix() = default;

    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                   std::span<const Triplet> entries) {
        CsrMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.row_ptr_.assign(rows + 1, 0);
        for (const auto& t : entries) {
            if (t.row >= rows || t.col >= cols) throw Error("triplet out of bounds");
            ++m.row_ptr_[t.row + 1];
        }
        for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        m.col_idx_.resize(entries.size());
        m.values_.resize(entries.size());
        std::vector<std::size_t> cursor(m.row_ptr_.begin(), m.row_ptr_.end() - 1);
        for (const auto& t : entries) {
            const std::size_t k = cursor[t.row]++;
            m.col_idx_[k] = t.col;
            m.values_[k] = t.value;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    // y = A x
    void mul(std::span<const double> x, std::span<double> y) const {
        for (std::size_t r = 0; r < rows_; ++r) {
            double acc = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                acc += values_[k] * x[col_idx_[k]];
            }
            y[r] = acc;
        }
    }

    // y = A^T x, scatter form
    void mul_transpose(std::span<const double> x, std::span<double> y) const {
        for (std::size_t c = 0; c < cols_; ++c) y[c] = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            const double xr = x[r];
            if (xr == 0.0) continue;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                y[col_idx_[k]] += values_[k] * xr;
            }
        }
    }

    // weighted row sums
    std::vector<double> row_sums() const {
        std::vector<double> s(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                s[r] += values_[k];
            }
        }
        return s;
    }

    std::vector<double> col_sums() const {
        std::vector<double> s(cols_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                s[col_idx_[k]] += values_[k];
            }
        }
        return s;
    }

    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> values_;
};

}  // namespace regrank
