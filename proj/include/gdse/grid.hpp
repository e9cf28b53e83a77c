#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gdse {

using Complex = std::complex<double>;

// Dense frames x bins grid stored frame-major (bin index fastest).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t frames, std::size_t bins, T fill = T{})
      : frames_(frames), bins_(bins), data_(frames * bins, fill) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t k, std::size_t f) { return data_[k * bins_ + f]; }
  const T& operator()(std::size_t k, std::size_t f) const { return data_[k * bins_ + f]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return frames_ == other.frames() && bins_ == other.bins();
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<Complex>;

}  // namespace gdse
