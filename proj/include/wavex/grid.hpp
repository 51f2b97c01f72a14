#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wavex/error.hpp"

namespace wavex {

/// Dense row-major H x W grid. Row index is y, column index is x.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, fill) {
    if (rows < 0 || cols < 0) fail(Errc::ShapeMismatch, "negative grid extent");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[std::size_t(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[std::size_t(r) * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  template <class U>
  bool same_shape(const Grid<U>& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  bool operator==(const Grid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

template <class T, class U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(Errc::ShapeMismatch, std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                  std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                  std::to_string(b.cols()));
  }
}

template <class T, class F>
Grid<T> make_grid(int rows, int cols, F&& f) {
  Grid<T> g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g(r, c) = f(r, c);
  return g;
}

}  // namespace wavex
