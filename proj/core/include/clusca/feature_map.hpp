#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace clusca {

// Row-major T x D matrix of real activations. One row per token.
//
// Partial module outputs may have zero rows; every other map produced by the
// library has rows >= 1 and cols >= 1.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t rows, std::size_t cols, double fill = 0.0);
  FeatureMap(std::size_t rows, std::size_t cols, std::vector<double> data);

  static FeatureMap from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static FeatureMap identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept;
  bool same_shape(const FeatureMap& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  FeatureMap& operator+=(const FeatureMap& other);
  FeatureMap& operator-=(const FeatureMap& other);
  FeatureMap& operator*=(double s) noexcept;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

FeatureMap operator+(FeatureMap a, const FeatureMap& b);
FeatureMap operator-(FeatureMap a, const FeatureMap& b);
FeatureMap operator*(FeatureMap a, double s);
FeatureMap operator*(double s, FeatureMap a);

}  // namespace clusca
