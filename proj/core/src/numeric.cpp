#include "clusca/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clusca/error.hpp"

namespace clusca {

FeatureMap matmul(const FeatureMap& a, const FeatureMap& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
  const std::size_t n = a.rows();
  const std::size_t inner = a.cols();
  const std::size_t m = b.cols();
  FeatureMap out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = out.row(i).data();
    for (std::size_t p = 0; p < inner; ++p) {
      const double s = a(i, p);
      const double* src = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) dst[j] += s * src[j];
    }
  }
  return out;
}

FeatureMap matmul_transposed(const FeatureMap& a, const FeatureMap& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: column counts differ (" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.cols()) + ")");
  }
  FeatureMap out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < ai.size(); ++p) acc += ai[p] * bj[p];
      out(i, j) = acc;
    }
  }
  return out;
}

FeatureMap transpose(const FeatureMap& m) {
  FeatureMap out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

FeatureMap softmax_rows(const FeatureMap& m) {
  FeatureMap out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto dst = out.row(i);
    if (in.empty()) continue;
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - peak);
      total += dst[j];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

FeatureMap layer_norm(const FeatureMap& m, std::span<const double> gain,
                      std::span<const double> bias, double eps) {
  if (gain.size() != m.cols() || bias.size() != m.cols()) {
    throw ShapeError("layer_norm: gain/bias length " + std::to_string(gain.size()) + "/" +
                     std::to_string(bias.size()) + " does not match width " +
                     std::to_string(m.cols()));
  }
  FeatureMap out(m.rows(), m.cols());
  const double width = static_cast<double>(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= width;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= width;
    const double inv = 1.0 / std::sqrt(var + eps);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) dst[j] = (in[j] - mean) * inv * gain[j] + bias[j];
  }
  return out;
}

FeatureMap seeded_gaussian(std::size_t rows, std::size_t cols, SeededRng& rng) {
  FeatureMap out(rows, cols);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

void gelu_inplace(FeatureMap& m) noexcept {
  constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  for (double& x : m.values()) x = 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

double frobenius_norm(const FeatureMap& m) noexcept {
  double acc = 0.0;
  for (double v : m.values()) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace clusca
