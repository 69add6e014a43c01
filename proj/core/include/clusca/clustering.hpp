#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "clusca/feature_map.hpp"
#include "clusca/model.hpp"
#include "clusca/rng.hpp"

namespace clusca {

using Label = std::uint32_t;

struct ClusterAssignment {
  std::vector<Label> labels;  // one per token, each < clusters
  FeatureMap centroids;       // clusters x D
  std::size_t clusters = 0;
  double inertia = 0.0;       // within-cluster sum of squares
  std::size_t iterations = 0;
  // WCSS after each Lloyd iteration; non-increasing.
  std::vector<double> objective_history;

  std::size_t non_empty_clusters() const;
};

// Centroids kept from the last full-calculation clustering.
struct CentroidCache {
  FeatureMap centroids;
  std::size_t origin_step = 0;
};

struct RandomInit {
  std::uint64_t seed = 0;
};

struct WarmStart {
  CentroidCache cache;
};

using KMeansInit = std::variant<RandomInit, WarmStart>;

struct KMeansOptions {
  std::size_t max_iters = 50;
  double tol = 1e-6;  // stop once no centroid moves farther than this
};

// Lloyd's algorithm on squared Euclidean distance.
//
// RandomInit seeds centroids with k-means++ from the cluster-init stream of
// `seed`; WarmStart begins from cached centroids. Ties in assignment go to
// the lowest cluster index. A cluster left empty after an update is
// re-seeded at the point farthest from its nearest centroid. With
// clusters == T the singleton partition is returned directly (zero
// iterations).
ClusterAssignment kmeans(const FeatureMap& features, std::size_t clusters, const KMeansInit& init,
                         const KMeansOptions& options = {});

// One uniformly chosen member per non-empty cluster, sorted by token index.
ComputeSet select_representatives(const ClusterAssignment& assignment, SeededRng& rng);

// Adjusted Rand index from the pair-counting contingency table. Two
// partitions that both leave the index undefined (max index equal to the
// expected index, e.g. single cluster vs single cluster) score 1.
double ari(std::span<const Label> a, std::span<const Label> b);

struct DistanceStats {
  double intra_mean = 0.0;   // mean pairwise distance inside clusters
  double global_mean = 0.0;  // mean pairwise distance over all tokens
  double ratio = 0.0;        // intra / global, 0 when global is 0
};

DistanceStats distance_stats(const FeatureMap& features, const ClusterAssignment& assignment);

}  // namespace clusca
