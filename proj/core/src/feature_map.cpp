#include "clusca/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clusca/error.hpp"

namespace clusca {
namespace {

std::string shape_string(const FeatureMap& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const FeatureMap& a, const FeatureMap& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

}  // namespace

FeatureMap::FeatureMap(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

FeatureMap::FeatureMap(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("FeatureMap: " + std::to_string(data_.size()) +
                     " values do not fill a " + std::to_string(rows_) + "x" +
                     std::to_string(cols_) + " map");
  }
}

FeatureMap FeatureMap::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("FeatureMap::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return FeatureMap(r, c, std::move(data));
}

FeatureMap FeatureMap::identity(std::size_t n) {
  FeatureMap m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool FeatureMap::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

FeatureMap& FeatureMap::operator+=(const FeatureMap& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

FeatureMap& FeatureMap::operator-=(const FeatureMap& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

FeatureMap& FeatureMap::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

FeatureMap operator+(FeatureMap a, const FeatureMap& b) { return a += b; }
FeatureMap operator-(FeatureMap a, const FeatureMap& b) { return a -= b; }
FeatureMap operator*(FeatureMap a, double s) { return a *= s; }
FeatureMap operator*(double s, FeatureMap a) { return a *= s; }

}  // namespace clusca
