#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "clusca/clustering.hpp"
#include "clusca/feature_map.hpp"

namespace clusca {

// ||a - b||_F / max(||b||_F, tiny).
double relative_error(const FeatureMap& a, const FeatureMap& b);

enum class SimilarityMode { temporal, spatial };

// Cosine similarities; zero-norm vectors score 0.
//   temporal: row p holds, per token, the similarity between snapshot p and
//             snapshot p + step_distance (needs >= 2 snapshots).
//   spatial:  T x T token-pair similarities of snapshots.front().
FeatureMap similarity_map(std::span<const FeatureMap> snapshots, SimilarityMode mode,
                          std::size_t step_distance = 1);

struct LabeledStep {
  std::size_t step = 0;
  std::vector<Label> labels;
};

struct AriPoint {
  std::size_t offset = 0;
  std::size_t from_step = 0;
  std::size_t to_step = 0;
  double value = 0.0;

  friend bool operator==(const AriPoint&, const AriPoint&) = default;
};

// ARI between every pair of assignments whose steps differ by one of
// `offsets`, grouped by offset then by originating step.
std::vector<AriPoint> ari_series(std::span<const LabeledStep> assignments,
                                 std::span<const std::size_t> offsets);

// Projection onto the two leading principal axes. Axes come from power
// iteration with deflation on the sample covariance, each oriented so its
// largest-magnitude component is positive.
std::vector<std::array<double, 2>> pca2d(std::span<const std::vector<double>> points);

}  // namespace clusca
