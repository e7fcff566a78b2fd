#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace gtaon {

// Row-major packed binary matrix.  Row = test, column = item.  Bits beyond
// the last column of each row are kept zero so word-level popcounts and ORs
// need no masking.
class BitMatrix {
public:
    BitMatrix() : rows_(0), cols_(0), words_per_row_(0) {}

    BitMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
          words_(rows * words_per_row_, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t words_per_row() const { return words_per_row_; }

    bool get(std::size_t i, std::size_t j) const {
        check_index(i, j);
        return (words_[i * words_per_row_ + (j >> 6)] >> (j & 63)) & 1u;
    }

    void set(std::size_t i, std::size_t j, bool value = true) {
        check_index(i, j);
        std::uint64_t& w = words_[i * words_per_row_ + (j >> 6)];
        const std::uint64_t mask = std::uint64_t(1) << (j & 63);
        if (value) {
            w |= mask;
        } else {
            w &= ~mask;
        }
    }

    std::span<const std::uint64_t> row(std::size_t i) const {
        return {words_.data() + i * words_per_row_, words_per_row_};
    }

    void fill_row(std::size_t i, bool value) {
        std::uint64_t* w = words_.data() + i * words_per_row_;
        if (!value) {
            for (std::size_t j = 0; j < words_per_row_; ++j) w[j] = 0;
            return;
        }
        for (std::size_t j = 0; j < words_per_row_; ++j) w[j] = ~std::uint64_t(0);
        mask_row_tail(i);
    }

    std::size_t row_weight(std::size_t i) const {
        std::size_t count = 0;
        for (std::uint64_t w : row(i)) count += std::popcount(w);
        return count;
    }

    std::size_t column_weight(std::size_t j) const {
        std::size_t count = 0;
        for (std::size_t i = 0; i < rows_; ++i) count += get(i, j);
        return count;
    }

    // acc |= row i; acc must have words_per_row() entries.
    void or_row_into(std::size_t i, std::uint64_t* acc) const {
        const std::uint64_t* w = words_.data() + i * words_per_row_;
        for (std::size_t j = 0; j < words_per_row_; ++j) acc[j] |= w[j];
    }

    // True iff row i has a 1 at any of the given (sorted or not) columns.
    bool row_intersects(std::size_t i, std::span<const std::size_t> items) const {
        const std::uint64_t* w = words_.data() + i * words_per_row_;
        for (std::size_t j : items) {
            if ((w[j >> 6] >> (j & 63)) & 1u) return true;
        }
        return false;
    }

    bool operator==(const BitMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && words_ == other.words_;
    }

private:
    void check_index(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_) {
            throw std::out_of_range("BitMatrix: index out of range");
        }
    }

    void mask_row_tail(std::size_t i) {
        const std::size_t tail = cols_ & 63;
        if (tail != 0 && words_per_row_ > 0) {
            words_[i * words_per_row_ + words_per_row_ - 1] &=
                (std::uint64_t(1) << tail) - 1;
        }
    }

    std::size_t rows_;
    std::size_t cols_;
    std::size_t words_per_row_;
    std::vector<std::uint64_t> words_;
};

inline std::size_t popcount_words(std::span<const std::uint64_t> words) {
    std::size_t count = 0;
    for (std::uint64_t w : words) count += std::popcount(w);
    return count;
}

}  // namespace gtaon
