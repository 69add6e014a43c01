#include "clusca/noise_schedule.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "clusca/error.hpp"

namespace clusca {
namespace {

void require_step(const NoiseSchedule& s, std::size_t t) {
  if (t < 1 || t > s.steps()) {
    throw BoundsError("timestep " + std::to_string(t) + " outside [1, " +
                      std::to_string(s.steps()) + "]");
  }
}

void require_same(const FeatureMap& a, const FeatureMap& b, const char* op) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": latent and noise shapes differ");
}

}  // namespace

std::string_view to_string(ScheduleShape s) noexcept {
  return s == ScheduleShape::linear ? "linear" : "cosine";
}

std::string_view to_string(UpdateRule r) noexcept {
  return r == UpdateRule::direct ? "direct" : "ddim";
}

ScheduleShape schedule_shape_from_string(std::string_view name) {
  if (name == "linear") return ScheduleShape::linear;
  if (name == "cosine") return ScheduleShape::cosine;
  throw ConfigError("schedule.shape", "unknown shape '" + std::string(name) + "'");
}

UpdateRule update_rule_from_string(std::string_view name) {
  if (name == "direct") return UpdateRule::direct;
  if (name == "ddim") return UpdateRule::ddim;
  throw ConfigError("schedule.update_rule", "unknown rule '" + std::string(name) + "'");
}

NoiseSchedule::NoiseSchedule(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw ConfigError("schedule.steps", "must be >= 1");
  double prev = 1.0;
  double bar = 1.0;
  alpha_bars_.reserve(alphas_.size());
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    const double a = alphas_[i];
    if (!(a > 0.0 && a <= 1.0)) {
      throw ConfigError("schedule", "alpha_" + std::to_string(i + 1) + " = " + std::to_string(a) +
                                        " outside (0, 1]");
    }
    if (a > prev) throw ConfigError("schedule", "alphas must be non-increasing in t");
    prev = a;
    bar *= a;
    alpha_bars_.push_back(bar);
  }
}

double NoiseSchedule::alpha(std::size_t t) const {
  require_step(*this, t);
  return alphas_[t - 1];
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t == 0) return 1.0;
  require_step(*this, t);
  return alpha_bars_[t - 1];
}

NoiseSchedule make_schedule(std::size_t steps, double alpha_start, double alpha_end,
                            ScheduleShape shape) {
  if (steps < 1) throw ConfigError("schedule.steps", "must be >= 1");
  if (!(alpha_end > 0.0)) throw ConfigError("schedule.alpha_end", "must be > 0");
  if (!(alpha_start <= 1.0)) throw ConfigError("schedule.alpha_start", "must be <= 1");
  if (alpha_end > alpha_start) {
    throw ConfigError("schedule.alpha_end", "must not exceed alpha_start");
  }
  std::vector<double> alphas(steps, alpha_start);
  for (std::size_t i = 1; i < steps; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(steps - 1);
    const double w = shape == ScheduleShape::linear
                         ? u
                         : 1.0 - std::cos(0.5 * std::numbers::pi * u);
    alphas[i] = i + 1 == steps ? alpha_end : alpha_start + (alpha_end - alpha_start) * w;
  }
  return NoiseSchedule(std::move(alphas));
}

FeatureMap forward_diffuse(const FeatureMap& x0, std::size_t t, const FeatureMap& eps,
                           const NoiseSchedule& schedule) {
  require_same(x0, eps, "forward_diffuse");
  const double a = schedule.alpha(t);
  const double signal = std::sqrt(a);
  const double noise = std::sqrt(1.0 - a);
  FeatureMap out(x0.rows(), x0.cols());
  auto dst = out.values();
  const auto xs = x0.values();
  const auto es = eps.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = signal * xs[i] + noise * es[i];
  return out;
}

FeatureMap ddim_step(const FeatureMap& latent, const FeatureMap& eps_hat, std::size_t t,
                     const NoiseSchedule& schedule, UpdateRule rule) {
  require_same(latent, eps_hat, "ddim_step");
  FeatureMap out(latent.rows(), latent.cols());
  auto dst = out.values();
  const auto xs = latent.values();
  const auto es = eps_hat.values();
  if (rule == UpdateRule::direct) {
    const double a = schedule.alpha(t);
    // (1 - a) / sqrt(1 - a) simplifies to sqrt(1 - a), which stays defined at a = 1.
    const double noise = std::sqrt(1.0 - a);
    const double inv = 1.0 / std::sqrt(a);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = inv * (xs[i] - noise * es[i]);
    return out;
  }
  const double bar = schedule.alpha_bar(t);
  const double prev = schedule.alpha_bar(t - 1);
  const double noise = std::sqrt(1.0 - bar);
  const double inv = 1.0 / std::sqrt(bar);
  const double keep = std::sqrt(prev);
  const double renoise = std::sqrt(1.0 - prev);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double x0 = inv * (xs[i] - noise * es[i]);
    dst[i] = keep * x0 + renoise * es[i];
  }
  return out;
}

}  // namespace clusca
