#include <cmath>

#include "clusca/cache_engine.hpp"
#include "clusca/error.hpp"
#include "clusca/metrics.hpp"
#include "clusca/noise_schedule.hpp"
#include "clusca/numeric.hpp"
#include "clusca/rng.hpp"
#include "clusca/sampler.hpp"
#include "clusca/taylor_cache.hpp"
#include "doctest.h"

using namespace clusca;

namespace {

FeatureMap scalar(double v) { return FeatureMap(1, 1, v); }

std::vector<std::size_t> full_positions(const StepPlan& p) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.tags[i] == StepTag::full) out.push_back(i);
  return out;
}

ModelConfig toy() {
  ModelConfig cfg;
  cfg.depth = 2;
  cfg.grid_h = 4;
  cfg.grid_w = 4;
  cfg.dim = 8;
  cfg.heads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("plan_schedule") {
  const auto p = plan_schedule(10, 5, false);
  CHECK(full_positions(p) == std::vector<std::size_t>{0, 5});
  CHECK(p.full_count() == 2);
  CHECK(p.offsets == std::vector<std::size_t>{0, 1, 2, 3, 4, 0, 1, 2, 3, 4});
  CHECK(p.opens_cycle(0));
  CHECK_FALSE(p.opens_cycle(1));

  CHECK(plan_schedule(7, 1, false).full_count() == 7);
  CHECK(plan_schedule(7, 1, true).full_count() == 7);

  const auto r = plan_schedule(10, 5, true);
  CHECK(full_positions(r) == std::vector<std::size_t>{0, 9});
  CHECK(r.offsets[8] == 8);
  CHECK_FALSE(r.opens_cycle(9));

  const auto even = plan_schedule(11, 5, true);  // last step already full
  CHECK(full_positions(even) == std::vector<std::size_t>{0, 5, 10});

  for (std::size_t steps = 1; steps <= 30; ++steps)
    for (std::size_t n = 1; n <= 7; ++n) {
      const auto plain = plan_schedule(steps, n, false);
      CHECK(plain.tags.front() == StepTag::full);
      for (std::size_t i = 0; i < steps; ++i) {
        if (plain.tags[i] == StepTag::partial) {
          CHECK(plain.offsets[i] >= 1);
          CHECK(plain.offsets[i] <= n - 1);
        }
      }
      const auto moved = plan_schedule(steps, n, true);
      CHECK(moved.full_count() == plain.full_count());
      CHECK(moved.tags.front() == StepTag::full);
      if (plain.full_count() >= 2) CHECK(moved.tags.back() == StepTag::full);
    }
}

TEST_CASE("refresh_full builds the difference stack") {
  TaylorCacheEntry e(2);
  CHECK_FALSE(e.refreshed());
  refresh_full(e, scalar(10), 0);
  CHECK(e.base() == scalar(10));
  CHECK(e.available_levels() == 0);
  CHECK_THROWS_AS(e.difference(1), PolicyError);

  // Differences point back in time: previous minus latest.
  TaylorCacheEntry one(1);
  refresh_full(one, scalar(10), 0);
  refresh_full(one, scalar(12), 5);
  CHECK(one.difference(1) == scalar(-2));
  CHECK(one.base() == scalar(12));
  CHECK(one.refresh_step() == 5);
  refresh_full(one, scalar(20), 10);
  CHECK(one.available_levels() == 1);

  TaylorCacheEntry flat(3);
  for (int i = 0; i < 5; ++i) refresh_full(flat, scalar(7), 0);
  CHECK(flat.available_levels() == 3);
  for (std::size_t l = 1; l <= 3; ++l) CHECK(flat.difference(l) == scalar(0));

  CHECK_THROWS_AS(refresh_full(flat, FeatureMap(2, 1), 0), ShapeError);

  TaylorCacheEntry none(0);
  refresh_full(none, scalar(1), 0);
  refresh_full(none, scalar(2), 1);
  CHECK(none.available_levels() == 0);
}

TEST_CASE("taylor_forecast examples") {
  TaylorCacheEntry fresh(1);
  CHECK_THROWS_AS(taylor_forecast(fresh, 1, 4, 1), PolicyError);

  TaylorCacheEntry e1(1);
  refresh_full(e1, scalar(12), 0);
  refresh_full(e1, scalar(10), 4);  // F = 10, D1 = 2
  CHECK(taylor_forecast(e1, 0, 4, 1) == scalar(10));
  CHECK(taylor_forecast(e1, 2, 4, 1)(0, 0) == doctest::Approx(9.0).epsilon(1e-15));

  TaylorCacheEntry e2(2);
  refresh_full(e2, scalar(18), 0);
  refresh_full(e2, scalar(12), 4);
  refresh_full(e2, scalar(10), 8);  // F = 10, D1 = 2, D2 = 4
  REQUIRE(e2.difference(1) == scalar(2));
  REQUIRE(e2.difference(2) == scalar(4));
  CHECK(taylor_forecast(e2, 2, 4, 2)(0, 0) == doctest::Approx(9.5).epsilon(1e-15));
  CHECK(taylor_forecast(e2, 2, 4, 1)(0, 0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(taylor_forecast(e2, 2, 4, 0) == scalar(10));
}

TEST_CASE("taylor_forecast is exact on linear trajectories") {
  const std::size_t n = 5;
  for (std::size_t order : {1, 2}) {
    TaylorCacheEntry e(order);
    const auto f = [](double s) { return 3.0 - 0.75 * s; };
    for (std::size_t r = 0; r < 4; ++r) {
      refresh_full(e, scalar(f(static_cast<double>(r * n))), r * n);
      if (r < 1) continue;
      for (std::size_t k = 1; k < n; ++k) {
        const double want = f(static_cast<double>(r * n + k));
        CHECK(std::abs(taylor_forecast(e, k, n, order)(0, 0) - want) <= 1e-9);
      }
    }
  }
}

TEST_CASE("cluster_mean") {
  const std::vector<Label> labels{0, 0, 1, 2};
  const auto compute = ComputeSet::from_indices({0, 1, 2}, 4);
  const auto mu = cluster_mean(FeatureMap::from_rows({{1}, {3}, {8}}), compute, labels, 3);
  CHECK(mu.means(0, 0) == 2.0);
  CHECK(mu.means(1, 0) == 8.0);
  CHECK(mu.present == std::vector<bool>{true, true, false});
  CHECK_THROWS_AS(cluster_mean(FeatureMap(2, 1), compute, labels, 3), ShapeError);
}

TEST_CASE("clusca_update blends cluster means into the forecast") {
  TaylorCacheEntry e(0);
  refresh_full(e, FeatureMap::from_rows({{1}, {1}, {5}, {7}}), 0);
  const std::vector<Label> labels{0, 0, 1, 2};
  const auto compute = ComputeSet::from_indices({0, 2}, 4);
  const auto computed = FeatureMap::from_rows({{2}, {6}});

  const auto mid = clusca_update(e, computed, compute, labels, 3, 0.005, 1, 5, 0);
  CHECK(mid(0, 0) == 2.0);
  CHECK(mid(1, 0) == 0.005 * 2.0 + (1.0 - 0.005) * 1.0);
  CHECK(mid(2, 0) == 6.0);
  CHECK(mid(3, 0) == 7.0);  // cluster 2 has no computed member
  CHECK(e.working() == mid);

  const auto zero = clusca_update(e, computed, compute, labels, 3, 0.0, 1, 5, 0);
  CHECK(zero(1, 0) == 1.0);
  const auto one = clusca_update(e, computed, compute, labels, 3, 1.0, 1, 5, 0);
  CHECK(one(1, 0) == 2.0);

  CHECK_THROWS_AS(clusca_update(e, computed, compute, labels, 3, 1.5, 1, 5, 0), ConfigError);
  CHECK_THROWS_AS(clusca_update(e, computed, compute, labels, 3, -0.1, 1, 5, 0), ConfigError);
}

TEST_CASE("toca_update writes computed rows into the working cache") {
  TaylorCacheEntry e(0);
  CHECK_THROWS_AS(toca_update(e, FeatureMap{}, ComputeSet{}), PolicyError);
  refresh_full(e, FeatureMap::from_rows({{1}, {2}, {3}}), 0);
  toca_update(e, FeatureMap::from_rows({{9}}), ComputeSet::from_indices({1}, 3));
  const auto w = toca_update(e, FeatureMap::from_rows({{4}}), ComputeSet::from_indices({2}, 3));
  CHECK(w == FeatureMap::from_rows({{1}, {9}, {4}}));
}

TEST_CASE("engine directives per policy") {
  const auto cfg = toy();
  const auto plan = plan_schedule(6, 3, false);
  const auto directive_at = [&](PolicyKind kind, std::size_t step) {
    CacheConfig c;
    c.policy = kind;
    c.interval = 3;
    c.clusters = 4;
    CacheEngine e(cfg, c, plan, {});
    e.begin_step(step);
    return e.directive(0, Module::attention);
  };
  CHECK(directive_at(PolicyKind::fora, 0) == directive_at(PolicyKind::full, 0));
  CHECK(directive_at(PolicyKind::clusca, 0) == directive_at(PolicyKind::full, 0));
  CHECK(directive_at(PolicyKind::fora, 1).resolution == Resolution::reuse);
  CHECK(directive_at(PolicyKind::taylorseer, 1).resolution == Resolution::forecast);
  CHECK(directive_at(PolicyKind::toca, 1).compute.size() == 4);
  CHECK(directive_at(PolicyKind::full, 1).compute.covers(cfg.tokens()));

  CacheConfig c;
  CHECK_THROWS_AS(CacheEngine(cfg, c, plan, {}).directive(0, Module::mlp), PolicyError);
  c.clusters = 4;
  CacheEngine e(cfg, c, plan, {});
  e.begin_step(0);
  CHECK_THROWS_AS(e.directive(0, Module::block), PolicyError);
  CHECK_THROWS_AS(e.begin_step(7), PolicyError);

  StepPlan bad = plan;
  bad.tags[0] = StepTag::partial;
  CHECK_THROWS_AS(CacheEngine(cfg, c, bad, {}), PolicyError);
}

TEST_CASE("partial ClusCa rows at the compute set are fresh") {
  const auto cfg = toy();
  const Model model(cfg);
  CacheConfig cache;
  cache.interval = 4;
  cache.clusters = 3;
  cache.gamma = 0.3;
  CacheEngine engine(cfg, cache, plan_schedule(8, 4, false), {1, 2});
  SeededRng rng(4, RngStream::noise);
  auto latent = seeded_gaussian(cfg.tokens(), cfg.dim, rng);
  const auto schedule = make_schedule(8, 0.999, 0.95, ScheduleShape::linear);

  class Probe final : public CacheContext {
   public:
    explicit Probe(CacheEngine& e) : e_(e) {}
    ComputeSet compute_set(std::size_t l) override { return e_.compute_set(l); }
    FeatureMap resolve(std::size_t l, Module m, const ComputeSet& c, const FeatureMap& x) override {
      FeatureMap out = e_.resolve(l, m, c, x);
      const auto idx = c.indices();
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < x.cols(); ++j) fresh_ok &= out(idx[r], j) == x(r, j);
      return out;
    }
    void observe(std::size_t l, const FeatureMap& h) override { e_.observe(l, h); }
    bool fresh_ok = true;

   private:
    CacheEngine& e_;
  } probe(engine);

  for (std::size_t i = 0; i < 8; ++i) {
    engine.begin_step(i);
    const auto eps = predict_noise(model, latent, 8 - i, 0, probe);
    engine.end_step();
    if (engine.current_tag() == StepTag::partial) CHECK(engine.step_accounting().computed_tokens <= 3);
    latent = ddim_step(latent, eps, 8 - i, schedule);
  }
  CHECK(probe.fresh_ok);
  CHECK(engine.clusterings().size() == 2);
  CHECK(engine.assignment().has_value());
}

TEST_CASE("reduction lattice on the model") {
  ModelConfig cfg = toy();
  const Model model(cfg);
  const auto schedule = make_schedule(10, 0.999, 0.95, ScheduleShape::linear);
  SampleOptions opts;
  opts.noise_seed = 3;
  opts.record.latents = true;

  for (std::size_t order : {0, 1, 2}) {
    CacheConfig ts;
    ts.policy = PolicyKind::taylorseer;
    ts.interval = 4;
    ts.order = order;
    CacheConfig cc = ts;
    cc.policy = PolicyKind::clusca;
    cc.gamma = 0.0;
    cc.clusters = 4;
    cc.skip_representatives = true;
    const auto a = sample(model, ts, schedule, opts);
    const auto b = sample(model, cc, schedule, opts);
    for (std::size_t s = 0; s < 10; ++s) {
      CHECK(frobenius_norm(a.latents[s] - b.latents[s]) <= 1e-12);
    }
  }
  CacheConfig fora;
  fora.policy = PolicyKind::fora;
  fora.interval = 4;
  CacheConfig ts0 = fora;
  ts0.policy = PolicyKind::taylorseer;
  ts0.order = 0;
  const auto a = sample(model, fora, schedule, opts);
  const auto b = sample(model, ts0, schedule, opts);
  for (std::size_t s = 0; s < 10; ++s) CHECK(a.latents[s] == b.latents[s]);

  // FLOPs never exceed the full policy's.
  for (auto kind : {PolicyKind::fora, PolicyKind::toca, PolicyKind::taylorseer, PolicyKind::clusca}) {
    CacheConfig c;
    c.policy = kind;
    c.clusters = cfg.tokens();
    c.interval = 3;
    const auto r = sample(model, c, schedule, opts);
    CHECK(r.flops.total() <= r.flops.full_reference);
  }
}
