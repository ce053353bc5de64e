#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "mlaperf/checked_math.hpp"

namespace mlaperf {

// Row-major dense matrix over an arbitrary scalar backend.
template <class S>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(Count rows, Count cols, S fill = S{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(checked_mul(rows, cols)), fill) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("matrix dims must be non-negative");
        }
    }

    static DenseMatrix from_data(Count rows, Count cols, std::vector<S> data) {
        if (static_cast<Count>(data.size()) != checked_mul(rows, cols)) {
            throw std::invalid_argument(
                fmt::format("matrix data has {} values, expected {}x{}", data.size(), rows, cols));
        }
        DenseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_ = std::move(data);
        return m;
    }

    [[nodiscard]] Count rows() const { return rows_; }
    [[nodiscard]] Count cols() const { return cols_; }
    [[nodiscard]] std::span<const S> data() const { return data_; }
    [[nodiscard]] std::span<S> data() { return data_; }

    S& operator()(Count r, Count c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
    const S& operator()(Count r, Count c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }

    [[nodiscard]] std::span<const S> row(Count r) const {
        return std::span<const S>(data_).subspan(static_cast<std::size_t>(r * cols_), static_cast<std::size_t>(cols_));
    }

    [[nodiscard]] DenseMatrix transposed() const {
        DenseMatrix t(cols_, rows_);
        for (Count r = 0; r < rows_; ++r) {
            for (Count c = 0; c < cols_; ++c) {
                t(c, r) = (*this)(r, c);
            }
        }
        return t;
    }

    // Rows [first, first + count).
    [[nodiscard]] DenseMatrix row_block(Count first, Count count) const {
        if (first < 0 || count < 0 || first + count > rows_) {
            throw std::out_of_range("row block outside matrix");
        }
        DenseMatrix out(count, cols_);
        std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                  data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_), out.data_.begin());
        return out;
    }

    void append_rows(const DenseMatrix& other) {
        if (rows_ == 0 && cols_ == 0) {
            cols_ = other.cols_;
        }
        if (other.cols_ != cols_) {
            throw std::invalid_argument(
                fmt::format("cannot append {}-column rows to a {}-column matrix", other.cols_, cols_));
        }
        data_.insert(data_.end(), other.data_.begin(), other.data_.end());
        rows_ += other.rows_;
    }

private:
    Count rows_ = 0;
    Count cols_ = 0;
    std::vector<S> data_;
};

}  // namespace mlaperf
