#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <span>

namespace ptf {

/// Largest ambient dimension a target chart may use.
inline constexpr int kMaxAmbient = 8;

/// Fixed-capacity coordinate vector. Value type, never allocates.
class Coords {
 public:
  Coords() = default;
  explicit Coords(int n) : size_(n) { assert(n >= 0 && n <= kMaxAmbient); }
  Coords(std::initializer_list<double> values) : size_(static_cast<int>(values.size())) {
    assert(size_ <= kMaxAmbient);
    std::copy(values.begin(), values.end(), data_.begin());
  }
  explicit Coords(std::span<const double> values) : size_(static_cast<int>(values.size())) {
    assert(size_ <= kMaxAmbient);
    std::copy(values.begin(), values.end(), data_.begin());
  }

  int size() const noexcept { return size_; }
  double& operator[](int i) noexcept { return data_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const noexcept { return data_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const noexcept { return {data_.data(), static_cast<std::size_t>(size_)}; }
  std::span<double> values() noexcept { return {data_.data(), static_cast<std::size_t>(size_)}; }

  Coords& operator+=(const Coords& o) noexcept {
    for (int i = 0; i < size_; ++i) data_[i] += o.data_[i];
    return *this;
  }
  Coords& operator-=(const Coords& o) noexcept {
    for (int i = 0; i < size_; ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Coords& operator*=(double s) noexcept {
    for (int i = 0; i < size_; ++i) data_[i] *= s;
    return *this;
  }
  friend Coords operator+(Coords a, const Coords& b) noexcept { return a += b; }
  friend Coords operator-(Coords a, const Coords& b) noexcept { return a -= b; }
  friend Coords operator*(Coords a, double s) noexcept { return a *= s; }
  friend Coords operator*(double s, Coords a) noexcept { return a *= s; }
  friend Coords operator-(Coords a) noexcept { return a *= -1.0; }

  /// Euclidean dot product of the stored components.
  double dot(const Coords& o) const noexcept {
    double s = 0.0;
    for (int i = 0; i < size_; ++i) s += data_[i] * o.data_[i];
    return s;
  }
  double norm() const noexcept { return std::sqrt(dot(*this)); }
  double max_abs() const noexcept {
    double m = 0.0;
    for (int i = 0; i < size_; ++i) m = std::max(m, std::abs(data_[i]));
    return m;
  }
  bool all_finite() const noexcept {
    for (int i = 0; i < size_; ++i)
      if (!std::isfinite(data_[i])) return false;
    return true;
  }

  friend bool operator==(const Coords& a, const Coords& b) noexcept {
    if (a.size_ != b.size_) return false;
    for (int i = 0; i < a.size_; ++i)
      if (a.data_[i] != b.data_[i]) return false;
    return true;
  }

 private:
  std::array<double, kMaxAmbient> data_{};
  int size_ = 0;
};

}  // namespace ptf
