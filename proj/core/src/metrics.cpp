#include "clusca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clusca/error.hpp"
#include "clusca/numeric.hpp"

namespace clusca {
namespace {

double cosine(std::span<const double> a, std::span<const double> b) noexcept {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double norm(const std::vector<double>& v) noexcept {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::vector<double> multiply(const std::vector<std::vector<double>>& m,
                             const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

// Leading eigenvector of a symmetric PSD matrix, or zeros when it vanishes.
std::vector<double> leading_axis(const std::vector<std::vector<double>>& cov) {
  constexpr std::size_t kMaxIters = 10000;
  constexpr double kTol = 1e-15;
  const std::size_t n = cov.size();
  std::size_t start = 0;
  double best = -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cov[i][j] * cov[i][j];
    if (s > best) {
      best = s;
      start = j;
    }
  }
  std::vector<double> v(n, 0.0);
  if (best <= 0.0) return v;
  for (std::size_t i = 0; i < n; ++i) v[i] = cov[i][start];
  double len = norm(v);
  for (double& x : v) x /= len;

  for (std::size_t it = 0; it < kMaxIters; ++it) {
    std::vector<double> next = multiply(cov, v);
    len = norm(next);
    if (len == 0.0) return std::vector<double>(n, 0.0);
    for (double& x : next) x /= len;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - v[i]));
    v = std::move(next);
    if (change < kTol) break;
  }
  const auto peak = std::ranges::max_element(v, {}, [](double x) { return std::abs(x); });
  if (*peak < 0.0)
    for (double& x : v) x = -x;
  return v;
}

}  // namespace

double relative_error(const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b)) throw ShapeError("relative_error: shapes differ");
  double diff = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) diff += (av[i] - bv[i]) * (av[i] - bv[i]);
  const double denom = std::max(frobenius_norm(b), std::numeric_limits<double>::min());
  return std::sqrt(diff) / denom;
}

FeatureMap similarity_map(std::span<const FeatureMap> snapshots, SimilarityMode mode,
                          std::size_t step_distance) {
  if (mode == SimilarityMode::spatial) {
    if (snapshots.empty() || snapshots.front().rows() < 2) {
      throw ShapeError("similarity_map: spatial mode needs a snapshot with >= 2 tokens");
    }
    const FeatureMap& s = snapshots.front();
    FeatureMap out(s.rows(), s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i)
      for (std::size_t j = 0; j < s.rows(); ++j) out(i, j) = cosine(s.row(i), s.row(j));
    return out;
  }
  if (snapshots.size() < 2) throw ShapeError("similarity_map: temporal mode needs >= 2 snapshots");
  if (step_distance < 1 || step_distance >= snapshots.size()) {
    throw ShapeError("similarity_map: step distance " + std::to_string(step_distance) +
                     " out of range");
  }
  const std::size_t pairs = snapshots.size() - step_distance;
  const std::size_t tokens = snapshots.front().rows();
  FeatureMap out(pairs, tokens);
  for (std::size_t p = 0; p < pairs; ++p) {
    const FeatureMap& a = snapshots[p];
    const FeatureMap& b = snapshots[p + step_distance];
    if (!a.same_shape(b)) throw ShapeError("similarity_map: snapshot shapes differ");
    for (std::size_t i = 0; i < tokens; ++i) out(p, i) = cosine(a.row(i), b.row(i));
  }
  return out;
}

std::vector<AriPoint> ari_series(std::span<const LabeledStep> assignments,
                                 std::span<const std::size_t> offsets) {
  std::vector<AriPoint> out;
  for (std::size_t dt : offsets) {
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      for (std::size_t j = 0; j < assignments.size(); ++j) {
        const auto& a = assignments[i];
        const auto& b = assignments[j];
        if (b.step != a.step + dt) continue;
        out.push_back({dt, a.step, b.step, ari(a.labels, b.labels)});
      }
    }
  }
  return out;
}

std::vector<std::array<double, 2>> pca2d(std::span<const std::vector<double>> points) {
  if (points.size() < 2) throw ShapeError("pca2d: needs at least two points");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ShapeError("pca2d: points differ in dimension");
  }
  std::vector<double> mean(dim, 0.0);
  for (const auto& p : points)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += p[j];
  for (double& m : mean) m /= static_cast<double>(points.size());

  std::vector<std::vector<double>> centered;
  centered.reserve(points.size());
  for (const auto& p : points) {
    std::vector<double> c(dim);
    for (std::size_t j = 0; j < dim; ++j) c[j] = p[j] - mean[j];
    centered.push_back(std::move(c));
  }
  std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
  for (const auto& c : centered)
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) cov[i][j] += c[i] * c[j];
  const double scale = 1.0 / static_cast<double>(points.size() - 1);
  for (auto& row : cov)
    for (double& v : row) v *= scale;

  std::array<std::vector<double>, 2> axes;
  for (std::size_t a = 0; a < 2; ++a) {
    axes[a] = leading_axis(cov);
    const std::vector<double> cv = multiply(cov, axes[a]);
    double lambda = 0.0;
    for (std::size_t i = 0; i < dim; ++i) lambda += axes[a][i] * cv[i];
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) cov[i][j] -= lambda * axes[a][i] * axes[a][j];
  }

  std::vector<std::array<double, 2>> out(points.size(), {0.0, 0.0});
  for (std::size_t p = 0; p < centered.size(); ++p) {
    for (std::size_t a = 0; a < 2; ++a) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) acc += centered[p][j] * axes[a][j];
      out[p][a] = acc;
    }
  }
  return out;
}

}  // namespace clusca
