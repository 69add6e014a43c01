#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "clusca/feature_map.hpp"

namespace clusca {

enum class ScheduleShape { linear, cosine };

// How a noise estimate moves x_t to x_{t-1}.
//   direct: x_{t-1} = (x_t - (1 - a_t) / sqrt(1 - a_t) * eps) / sqrt(a_t), using the
//           per-step alpha exactly as written (sigma = 0).
//   ddim:   conventional deterministic DDIM on cumulative products abar_t.
enum class UpdateRule { direct, ddim };

std::string_view to_string(ScheduleShape s) noexcept;
std::string_view to_string(UpdateRule r) noexcept;
ScheduleShape schedule_shape_from_string(std::string_view name);
UpdateRule update_rule_from_string(std::string_view name);

// alpha_t for t = 1..steps, non-increasing in t and inside (0, 1].
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> alphas);

  std::size_t steps() const noexcept { return alphas_.size(); }
  double alpha(std::size_t t) const;      // 1-based
  double alpha_bar(std::size_t t) const;  // prod_{s<=t} alpha_s; alpha_bar(0) == 1
  std::span<const double> alphas() const noexcept { return alphas_; }

 private:
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

// Interpolates alpha from alpha_start at t = 1 to alpha_end at t = steps.
NoiseSchedule make_schedule(std::size_t steps, double alpha_start, double alpha_end,
                            ScheduleShape shape);

// sqrt(a_t) x0 + sqrt(1 - a_t) eps.
FeatureMap forward_diffuse(const FeatureMap& x0, std::size_t t, const FeatureMap& eps,
                           const NoiseSchedule& schedule);

FeatureMap ddim_step(const FeatureMap& latent, const FeatureMap& eps_hat, std::size_t t,
                     const NoiseSchedule& schedule, UpdateRule rule = UpdateRule::direct);

}  // namespace clusca
