#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clusca/clustering.hpp"
#include "clusca/feature_map.hpp"
#include "clusca/model.hpp"

namespace clusca {

// Cached output of one (layer, module): the feature from the latest full
// step, its finite-difference stack, and the working estimate handed out at
// the current step.
//
// Differences run toward earlier refreshes in timestep order, matching a
// forecast taken at offset -k:
//   D1 = F(previous refresh) - F(latest refresh)
//   Di = D(i-1)(previous) - D(i-1)(latest)
// Level i becomes available after i + 1 refreshes.
class TaylorCacheEntry {
 public:
  explicit TaylorCacheEntry(std::size_t order = 0) : order_(order) {}

  std::size_t order() const noexcept { return order_; }
  bool refreshed() const noexcept { return refreshes_ > 0; }
  std::size_t refresh_count() const noexcept { return refreshes_; }
  std::size_t available_levels() const noexcept { return differences_.size(); }
  std::size_t refresh_step() const noexcept { return refresh_step_; }

  const FeatureMap& base() const noexcept { return base_; }
  // level in [1, available_levels()]
  const FeatureMap& difference(std::size_t level) const;

  const FeatureMap& working() const noexcept { return working_; }
  void set_working(FeatureMap m) { working_ = std::move(m); }

  friend void refresh_full(TaylorCacheEntry& entry, const FeatureMap& fresh, std::size_t step);

 private:
  std::size_t order_;
  std::size_t refreshes_ = 0;
  std::size_t refresh_step_ = 0;
  FeatureMap base_;
  std::vector<FeatureMap> differences_;
  FeatureMap working_;
};

// Installs a fully computed feature map and extends the difference stack.
void refresh_full(TaylorCacheEntry& entry, const FeatureMap& fresh, std::size_t step);

// F + sum_{i=1..m} D_i / (i! N^i) * (-k)^i with m = min(order, available
// levels). Throws PolicyError if the entry was never refreshed.
FeatureMap taylor_forecast(const TaylorCacheEntry& entry, std::size_t k, std::size_t interval,
                           std::size_t order);

struct ClusterMeans {
  FeatureMap means;           // clusters x D
  std::vector<bool> present;  // false when no computed token carries the label
};

// Mean of the freshly computed rows of each cluster.
ClusterMeans cluster_mean(const FeatureMap& computed, const ComputeSet& compute,
                          std::span<const Label> labels, std::size_t clusters);

// Spatial-temporal estimate of every token:
//   i in compute     -> computed row
//   i not in compute -> gamma * mu(label i) + (1 - gamma) * forecast_k(i)
// Clusters without a computed member fall back to the forecast. The result is
// stored as the entry's working estimate and returned.
FeatureMap clusca_update(TaylorCacheEntry& entry, const FeatureMap& computed,
                         const ComputeSet& compute, std::span<const Label> labels,
                         std::size_t clusters, double gamma, std::size_t k, std::size_t interval,
                         std::size_t order);

// Token-level cache write: computed rows overwrite the working estimate,
// every other row keeps its cached value.
FeatureMap toca_update(TaylorCacheEntry& entry, const FeatureMap& computed,
                       const ComputeSet& compute);

}  // namespace clusca
