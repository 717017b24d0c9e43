#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "qapsa/errors.hpp"

namespace qapsa {

/// Dense square matrix, row-major.
template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

  SquareMatrix(std::initializer_list<std::initializer_list<T>> rows) : n_(rows.size()) {
    data_.reserve(n_ * n_);
    for (const auto& row : rows) {
      if (row.size() != n_) throw DimensionError("matrix rows must all have length " + std::to_string(n_));
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t size() const noexcept { return n_; }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * n_, n_}; }
  std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * n_, n_}; }

  std::span<const T> values() const noexcept { return data_; }

  bool is_symmetric() const noexcept {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

  bool has_zero_diagonal() const noexcept {
    for (std::size_t i = 0; i < n_; ++i)
      if ((*this)(i, i) != T{}) return false;
    return true;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

}  // namespace qapsa
