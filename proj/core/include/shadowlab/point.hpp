#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace shadowlab {

/// A point of one of the supported compact spaces, stored in the space's
/// chart coordinates: (x, y) for the disk, the angle for the circle, the
/// value for the interval, and the concatenation for products.
class Point {
 public:
  static constexpr std::size_t kMaxDim = 4;

  Point() = default;
  Point(std::initializer_list<double> coords) {
    for (double c : coords) c_[dim_++] = c;
  }
  explicit Point(std::span<const double> coords) {
    for (double c : coords) c_[dim_++] = c;
  }

  std::size_t dim() const noexcept { return dim_; }
  double operator[](std::size_t i) const noexcept { return c_[i]; }
  double& operator[](std::size_t i) noexcept { return c_[i]; }
  std::span<const double> coords() const noexcept { return {c_.data(), dim_}; }

  void push_back(double v) noexcept { c_[dim_++] = v; }

  /// Coordinates [first, first + count) as a point of a factor space.
  Point slice(std::size_t first, std::size_t count) const noexcept {
    Point p;
    for (std::size_t i = 0; i < count; ++i) p.push_back(c_[first + i]);
    return p;
  }

  static Point concat(const Point& a, const Point& b) noexcept {
    Point p = a;
    for (std::size_t i = 0; i < b.dim(); ++i) p.push_back(b[i]);
    return p;
  }

  friend bool operator==(const Point& a, const Point& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

 private:
  std::array<double, kMaxDim> c_{};
  std::size_t dim_ = 0;
};

}  // namespace shadowlab
