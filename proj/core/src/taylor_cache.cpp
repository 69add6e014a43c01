#include "clusca/taylor_cache.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clusca/error.hpp"

namespace clusca {
namespace {

void require_rows(const FeatureMap& computed, const ComputeSet& compute, std::size_t cols,
                  const char* op) {
  if (computed.rows() != compute.size() || (computed.rows() > 0 && computed.cols() != cols)) {
    throw ShapeError(std::string(op) + ": computed rows do not match the compute set");
  }
}

}  // namespace

const FeatureMap& TaylorCacheEntry::difference(std::size_t level) const {
  if (level < 1 || level > differences_.size()) {
    throw PolicyError("difference level " + std::to_string(level) + " is not available");
  }
  return differences_[level - 1];
}

void refresh_full(TaylorCacheEntry& entry, const FeatureMap& fresh, std::size_t step) {
  if (entry.refreshed() && !fresh.same_shape(entry.base_)) {
    throw ShapeError("refresh_full: fresh features change the cached shape");
  }
  if (entry.refreshed() && entry.order_ > 0) {
    const std::size_t levels = std::min(entry.differences_.size() + 1, entry.order_);
    std::vector<FeatureMap> next;
    next.reserve(levels);
    next.push_back(entry.base_ - fresh);
    for (std::size_t i = 1; i < levels; ++i) next.push_back(entry.differences_[i - 1] - next[i - 1]);
    entry.differences_ = std::move(next);
  }
  entry.base_ = fresh;
  entry.working_ = fresh;
  entry.refresh_step_ = step;
  ++entry.refreshes_;
}

FeatureMap taylor_forecast(const TaylorCacheEntry& entry, std::size_t k, std::size_t interval,
                           std::size_t order) {
  if (!entry.refreshed()) throw PolicyError("taylor_forecast: cache entry was never refreshed");
  if (interval < 1) throw ConfigError("cache.interval", "must be >= 1");
  FeatureMap out = entry.base();
  if (k == 0) return out;
  const std::size_t levels = std::min(order, entry.available_levels());
  const double step = -static_cast<double>(k) / static_cast<double>(interval);
  double coef = 1.0;
  for (std::size_t i = 1; i <= levels; ++i) {
    coef *= step / static_cast<double>(i);  // (-k/N)^i / i!
    const auto diff = entry.difference(i).values();
    auto dst = out.values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += coef * diff[j];
  }
  return out;
}

ClusterMeans cluster_mean(const FeatureMap& computed, const ComputeSet& compute,
                          std::span<const Label> labels, std::size_t clusters) {
  const std::size_t dim = computed.cols();
  require_rows(computed, compute, dim, "cluster_mean");
  ClusterMeans out{FeatureMap(clusters, dim), std::vector<bool>(clusters, false)};
  std::vector<std::size_t> counts(clusters, 0);
  const auto idx = compute.indices();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= labels.size()) throw BoundsError("cluster_mean: token without a label");
    const Label c = labels[idx[r]];
    if (c >= clusters) throw BoundsError("cluster_mean: label exceeds cluster count");
    auto dst = out.means.row(c);
    const auto src = computed.row(r);
    for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    ++counts[c];
  }
  for (std::size_t c = 0; c < clusters; ++c) {
    if (counts[c] == 0) continue;
    out.present[c] = true;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (double& v : out.means.row(c)) v *= inv;
  }
  return out;
}

FeatureMap clusca_update(TaylorCacheEntry& entry, const FeatureMap& computed,
                         const ComputeSet& compute, std::span<const Label> labels,
                         std::size_t clusters, double gamma, std::size_t k, std::size_t interval,
                         std::size_t order) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("cache.gamma", "must lie in [0, 1]");
  FeatureMap estimate = taylor_forecast(entry, k, interval, order);
  if (labels.size() != estimate.rows()) {
    throw ShapeError("clusca_update: one label per token required");
  }
  require_rows(computed, compute, estimate.cols(), "clusca_update");
  const ClusterMeans mu = cluster_mean(computed, compute, labels, clusters);

  const auto idx = compute.indices();
  std::size_t next = 0;
  for (std::size_t i = 0; i < estimate.rows(); ++i) {
    auto dst = estimate.row(i);
    if (next < idx.size() && idx[next] == i) {
      std::ranges::copy(computed.row(next), dst.begin());
      ++next;
      continue;
    }
    const Label c = labels[i];
    if (!mu.present[c]) continue;
    const auto m = mu.means.row(c);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = gamma * m[j] + (1.0 - gamma) * dst[j];
  }
  entry.set_working(estimate);
  return estimate;
}

FeatureMap toca_update(TaylorCacheEntry& entry, const FeatureMap& computed,
                       const ComputeSet& compute) {
  if (!entry.refreshed()) throw PolicyError("toca_update: cache entry was never refreshed");
  FeatureMap estimate = entry.working();
  require_rows(computed, compute, estimate.cols(), "toca_update");
  const auto idx = compute.indices();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::ranges::copy(computed.row(r), estimate.row(idx[r]).begin());
  }
  entry.set_working(estimate);
  return estimate;
}

}  // namespace clusca
