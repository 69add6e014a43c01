#include "clusca/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "clusca/error.hpp"

namespace clusca {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

struct Nearest {
  Label index;
  double distance;
};

Nearest nearest_centroid(std::span<const double> point, const FeatureMap& centroids) noexcept {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (d < best.distance) best = {static_cast<Label>(c), d};
  }
  return best;
}

FeatureMap kmeans_plus_plus(const FeatureMap& features, std::size_t clusters, std::uint64_t seed) {
  SeededRng rng(seed, RngStream::cluster_init);
  const std::size_t n = features.rows();
  FeatureMap centroids(clusters, features.cols());
  std::size_t first = rng.uniform_index(n);
  std::ranges::copy(features.row(first), centroids.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(features.row(i), centroids.row(0));
  for (std::size_t c = 1; c < clusters; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double run = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (run > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    std::ranges::copy(features.row(pick), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(features.row(i), centroids.row(c)));
    }
  }
  return centroids;
}

// Sum of squared distances of each point to its labelled centroid.
double wcss(const FeatureMap& features, const std::vector<Label>& labels,
            const FeatureMap& centroids) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    acc += squared_distance(features.row(i), centroids.row(labels[i]));
  }
  return acc;
}

double choose2(double n) noexcept { return n * (n - 1.0) / 2.0; }

}  // namespace

std::size_t ClusterAssignment::non_empty_clusters() const {
  std::vector<bool> seen(clusters, false);
  for (Label l : labels) seen[l] = true;
  return static_cast<std::size_t>(std::ranges::count(seen, true));
}

ClusterAssignment kmeans(const FeatureMap& features, std::size_t clusters, const KMeansInit& init,
                         const KMeansOptions& options) {
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  if (n == 0 || dim == 0) throw ShapeError("kmeans: empty feature map");
  if (clusters < 1) throw ConfigError("cache.clusters", "must be >= 1");
  if (clusters > n) {
    throw ConfigError("cache.clusters", "K = " + std::to_string(clusters) +
                                            " exceeds token count " + std::to_string(n));
  }
  if (options.max_iters < 1) throw ConfigError("cache.kmeans_max_iters", "must be >= 1");
  if (!(options.tol >= 0.0)) throw ConfigError("cache.kmeans_tol", "must be >= 0");

  ClusterAssignment out;
  out.clusters = clusters;
  if (clusters == n) {
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = static_cast<Label>(i);
    out.centroids = features;
    return out;
  }

  FeatureMap centroids;
  if (const auto* warm = std::get_if<WarmStart>(&init)) {
    if (warm->cache.centroids.rows() != clusters || warm->cache.centroids.cols() != dim) {
      throw ShapeError("kmeans: warm-start centroids must be " + std::to_string(clusters) + "x" +
                       std::to_string(dim));
    }
    centroids = warm->cache.centroids;
  } else {
    centroids = kmeans_plus_plus(features, clusters, std::get<RandomInit>(init).seed);
  }

  std::vector<Label> labels(n, 0);
  std::vector<double> nearest(n, 0.0);
  std::vector<std::size_t> counts(clusters);
  for (std::size_t iter = 1; iter <= options.max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const Nearest best = nearest_centroid(features.row(i), centroids);
      labels[i] = best.index;
      nearest[i] = best.distance;
    }

    FeatureMap sums(clusters, dim);
    std::ranges::fill(counts, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = sums.row(labels[i]);
      const auto src = features.row(i);
      for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
      ++counts[labels[i]];
    }

    double shift = 0.0;
    FeatureMap next = centroids;
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] == 0) continue;
      auto dst = next.row(c);
      const auto src = sums.row(c);
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < dim; ++j) dst[j] = src[j] * inv;
    }
    out.objective_history.push_back(wcss(features, labels, next));

    // Empty clusters: move to the point worst served by the current centroids.
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (nearest[i] > nearest[far]) far = i;
      }
      std::ranges::copy(features.row(far), next.row(c).begin());
      nearest[far] = 0.0;
    }

    for (std::size_t c = 0; c < clusters; ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(next.row(c), centroids.row(c))));
    }
    centroids = std::move(next);
    out.iterations = iter;
    if (shift <= options.tol) break;
  }

  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.inertia = out.objective_history.back();
  return out;
}

ComputeSet select_representatives(const ClusterAssignment& assignment, SeededRng& rng) {
  std::vector<std::vector<std::size_t>> members(assignment.clusters);
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    members[assignment.labels[i]].push_back(i);
  }
  std::vector<std::size_t> picks;
  picks.reserve(assignment.clusters);
  for (const auto& m : members) {
    if (m.empty()) continue;
    picks.push_back(m[rng.uniform_index(m.size())]);
  }
  return ComputeSet::from_indices(std::move(picks), assignment.labels.size());
}

double ari(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) {
    throw ShapeError("ari: label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  std::map<std::pair<Label, Label>, std::size_t> joint;
  std::map<Label, std::size_t> rows;
  std::map<Label, std::size_t> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0;
  for (const auto& [key, count] : joint) index += choose2(static_cast<double>(count));
  double sum_a = 0.0;
  for (const auto& [key, count] : rows) sum_a += choose2(static_cast<double>(count));
  double sum_b = 0.0;
  for (const auto& [key, count] : cols) sum_b += choose2(static_cast<double>(count));

  // (index - expected) / (max - expected), scaled by the pair count so both
  // sides stay integral (exact in double for T up to a few thousand).
  const double pairs = choose2(static_cast<double>(a.size()));
  const double chance = sum_a * sum_b;
  const double num = index * pairs - chance;
  const double den = 0.5 * (sum_a + sum_b) * pairs - chance;
  if (pairs == 0.0 || den == 0.0) return 1.0;
  return num / den;
}

DistanceStats distance_stats(const FeatureMap& features, const ClusterAssignment& assignment) {
  const std::size_t n = features.rows();
  if (n < 2) throw ShapeError("distance_stats: needs at least two tokens");
  if (assignment.labels.size() != n) {
    throw ShapeError("distance_stats: assignment does not match feature rows");
  }
  double intra = 0.0;
  double global = 0.0;
  std::size_t intra_pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(squared_distance(features.row(i), features.row(j)));
      global += d;
      if (assignment.labels[i] == assignment.labels[j]) {
        intra += d;
        ++intra_pairs;
      }
    }
  }
  DistanceStats s;
  s.global_mean = global / choose2(static_cast<double>(n));
  s.intra_mean = intra_pairs == 0 ? 0.0 : intra / static_cast<double>(intra_pairs);
  s.ratio = s.global_mean == 0.0 ? 0.0 : s.intra_mean / s.global_mean;
  return s;
}

}  // namespace clusca
