#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace flexpipe {

/// Dense row-major matrix with value semantics.
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    const T& operator()(std::size_t r, std::size_t c) const noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    /// Copy of the block starting at (r0, c0), zero-padded where it runs past the edge.
    Matrix block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const {
        Matrix out(rows, cols);
        for (std::size_t r = 0; r < rows && r0 + r < rows_; ++r)
            for (std::size_t c = 0; c < cols && c0 + c < cols_; ++c)
                out(r, c) = (*this)(r0 + r, c0 + c);
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

}  // namespace flexpipe
