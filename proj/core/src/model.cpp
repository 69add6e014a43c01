#include "clusca/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clusca/error.hpp"
#include "clusca/numeric.hpp"
#include "clusca/rng.hpp"

namespace clusca {
namespace {

FeatureMap scaled_gaussian(std::size_t rows, std::size_t cols, double scale, SeededRng& rng) {
  FeatureMap m = seeded_gaussian(rows, cols, rng);
  m *= scale;
  return m;
}

std::vector<double> scaled_vector(std::size_t n, double scale, SeededRng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() * scale;
  return v;
}

FeatureMap gather_rows(const FeatureMap& m, std::span<const std::size_t> rows) {
  FeatureMap out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) std::ranges::copy(m.row(rows[r]), out.row(r).begin());
  return out;
}

void add_modulation(FeatureMap& m, std::span<const double> cond, std::span<const double> shift) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += cond[j] * shift[j];
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (depth < 1) throw ConfigError("model.depth", "must be >= 1");
  if (grid_h < 1) throw ConfigError("model.grid_h", "must be >= 1");
  if (grid_w < 1) throw ConfigError("model.grid_w", "must be >= 1");
  if (dim < 2 || dim % 2 != 0) throw ConfigError("model.dim", "must be an even number >= 2");
  if (heads < 1) throw ConfigError("model.heads", "must be >= 1");
  if (dim % heads != 0) {
    throw ConfigError("model.heads", "dim " + std::to_string(dim) +
                                         " is not divisible by heads " + std::to_string(heads));
  }
  if (num_classes < 1) throw ConfigError("model.num_classes", "must be >= 1");
}

std::string_view to_string(Module m) noexcept {
  switch (m) {
    case Module::attention: return "attention";
    case Module::mlp: return "mlp";
    case Module::block: return "block";
  }
  return "?";
}

Module module_from_string(std::string_view name) {
  if (name == "attention") return Module::attention;
  if (name == "mlp") return Module::mlp;
  if (name == "block") return Module::block;
  throw ConfigError("module", "unknown module '" + std::string(name) +
                                  "' (expected attention, mlp or block)");
}

ComputeSet ComputeSet::all(std::size_t tokens) {
  ComputeSet s;
  s.indices_.resize(tokens);
  for (std::size_t i = 0; i < tokens; ++i) s.indices_[i] = i;
  return s;
}

ComputeSet ComputeSet::from_indices(std::vector<std::size_t> indices, std::size_t tokens) {
  std::ranges::sort(indices);
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (!indices.empty() && indices.back() >= tokens) {
    throw BoundsError("compute set index " + std::to_string(indices.back()) +
                      " out of range for " + std::to_string(tokens) + " tokens");
  }
  ComputeSet s;
  s.indices_ = std::move(indices);
  return s;
}

bool ComputeSet::contains(std::size_t index) const noexcept {
  return std::ranges::binary_search(indices_, index);
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.dim;
  const std::size_t t = cfg_.tokens();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  SeededRng rng(cfg_.weight_seed, RngStream::weights);

  input_proj_ = scaled_gaussian(d, d, scale, rng);
  position_ = seeded_gaussian(t, d, rng);
  class_embed_ = seeded_gaussian(cfg_.num_classes, d, rng);
  blocks_.reserve(cfg_.depth);
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    BlockWeights b;
    b.query = scaled_gaussian(d, d, scale, rng);
    b.key = scaled_gaussian(d, d, scale, rng);
    b.value = scaled_gaussian(d, d, scale, rng);
    b.output = scaled_gaussian(d, d, scale, rng);
    b.mlp_in = scaled_gaussian(d, cfg_.mlp_hidden(), scale, rng);
    b.mlp_out = scaled_gaussian(cfg_.mlp_hidden(), d, scale, rng);
    b.norm1_gain.assign(d, 1.0);
    b.norm1_bias.assign(d, 0.0);
    b.norm2_gain.assign(d, 1.0);
    b.norm2_bias.assign(d, 0.0);
    b.shift1 = scaled_vector(d, scale, rng);
    b.shift2 = scaled_vector(d, scale, rng);
    blocks_.push_back(std::move(b));
  }
  final_gain_.assign(d, 1.0);
  final_bias_.assign(d, 0.0);
  output_proj_ = scaled_gaussian(d, d, scale, rng);
}

Model init_model(const ModelConfig& cfg) { return Model(cfg); }

bool operator==(const BlockWeights& a, const BlockWeights& b) {
  return a.query == b.query && a.key == b.key && a.value == b.value && a.output == b.output &&
         a.mlp_in == b.mlp_in && a.mlp_out == b.mlp_out && a.norm1_gain == b.norm1_gain &&
         a.norm1_bias == b.norm1_bias && a.norm2_gain == b.norm2_gain &&
         a.norm2_bias == b.norm2_bias && a.shift1 == b.shift1 && a.shift2 == b.shift2;
}

bool operator==(const Model& a, const Model& b) {
  return a.blocks_ == b.blocks_ && a.input_proj_ == b.input_proj_ &&
         a.position_ == b.position_ && a.class_embed_ == b.class_embed_ &&
         a.final_gain_ == b.final_gain_ && a.final_bias_ == b.final_bias_ &&
         a.output_proj_ == b.output_proj_;
}

FeatureMap Model::embed(const FeatureMap& latent) const {
  if (latent.rows() != cfg_.tokens() || latent.cols() != cfg_.dim) {
    throw ShapeError("embed: latent must be " + std::to_string(cfg_.tokens()) + "x" +
                     std::to_string(cfg_.dim));
  }
  FeatureMap h = matmul(latent, input_proj_);
  h += position_;
  return h;
}

std::vector<double> Model::conditioning(std::size_t timestep, std::size_t class_label) const {
  if (class_label >= cfg_.num_classes) {
    throw BoundsError("class label " + std::to_string(class_label) + " out of range");
  }
  const std::size_t half = cfg_.dim / 2;
  std::vector<double> cond(class_embed_.row(class_label).begin(),
                           class_embed_.row(class_label).end());
  // Frequencies span 0.1 .. 0.001 rad per step so the embedding drifts slowly.
  const double t = static_cast<double>(timestep);
  for (std::size_t j = 0; j < half; ++j) {
    const double freq = 0.1 * std::pow(0.01, static_cast<double>(j) / static_cast<double>(half));
    cond[2 * j] += std::sin(t * freq);
    cond[2 * j + 1] += std::cos(t * freq);
  }
  return cond;
}

FeatureMap Model::project_out(const FeatureMap& hidden) const {
  return matmul(layer_norm(hidden, final_gain_, final_bias_, kNormEps), output_proj_);
}

PartialOutputs block_forward(const BlockWeights& block, const ModelConfig& cfg,
                             const FeatureMap& features, std::span<const double> cond,
                             const ComputeSet& compute) {
  const std::size_t tokens = cfg.tokens();
  const std::size_t d = cfg.dim;
  if (features.rows() != tokens || features.cols() != d) {
    throw ShapeError("block_forward: features must be " + std::to_string(tokens) + "x" +
                     std::to_string(d));
  }
  if (cond.size() != d) throw ShapeError("block_forward: conditioning length must equal dim");
  const auto idx = compute.indices();
  if (!idx.empty() && idx.back() >= tokens) {
    throw BoundsError("block_forward: token " + std::to_string(idx.back()) + " out of range");
  }

  PartialOutputs out{compute, FeatureMap(idx.size(), d), FeatureMap(idx.size(), d)};
  if (idx.empty()) return out;

  FeatureMap normed = layer_norm(features, block.norm1_gain, block.norm1_bias, kNormEps);
  add_modulation(normed, cond, block.shift1);
  const FeatureMap keys = matmul(normed, block.key);
  const FeatureMap values = matmul(normed, block.value);
  const FeatureMap queries = matmul(gather_rows(normed, idx), block.query);

  const std::size_t heads = cfg.heads;
  const std::size_t hd = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  FeatureMap mixed(idx.size(), d);
  std::vector<double> weights(tokens);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto q = queries.row(r);
    auto dst = mixed.row(r);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * hd;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < tokens; ++j) {
        const auto k = keys.row(j);
        double s = 0.0;
        for (std::size_t p = 0; p < hd; ++p) s += q[off + p] * k[off + p];
        weights[j] = s * inv_sqrt;
        peak = std::max(peak, weights[j]);
      }
      double total = 0.0;
      for (double& w : weights) {
        w = std::exp(w - peak);
        total += w;
      }
      for (std::size_t j = 0; j < tokens; ++j) {
        const double w = weights[j] / total;
        const auto v = values.row(j);
        for (std::size_t p = 0; p < hd; ++p) dst[off + p] += w * v[off + p];
      }
    }
  }
  out.attention = matmul(mixed, block.output);

  FeatureMap residual = gather_rows(features, idx);
  residual += out.attention;
  FeatureMap hidden = layer_norm(residual, block.norm2_gain, block.norm2_bias, kNormEps);
  add_modulation(hidden, cond, block.shift2);
  FeatureMap expanded = matmul(hidden, block.mlp_in);
  gelu_inplace(expanded);
  out.mlp = matmul(expanded, block.mlp_out);
  return out;
}

FeatureMap FullComputeContext::resolve(std::size_t layer, Module module, const ComputeSet& compute,
                                       const FeatureMap& computed) {
  if (!compute.covers(tokens_)) {
    throw PolicyError("full-compute context has no cached value for layer " +
                      std::to_string(layer) + " " + std::string(to_string(module)));
  }
  return computed;
}

FeatureMap predict_noise(const Model& model, const FeatureMap& latent, std::size_t timestep,
                         std::size_t class_label, CacheContext& ctx) {
  const ModelConfig& cfg = model.config();
  const std::vector<double> cond = model.conditioning(timestep, class_label);
  FeatureMap hidden = model.embed(latent);
  const auto blocks = model.blocks();
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const ComputeSet compute = ctx.compute_set(l);
    PartialOutputs part = block_forward(blocks[l], cfg, hidden, cond, compute);
    FeatureMap attention = ctx.resolve(l, Module::attention, compute, part.attention);
    if (attention.rows() != cfg.tokens() || attention.cols() != cfg.dim) {
      throw PolicyError("cache context returned a malformed attention estimate");
    }
    hidden += attention;
    FeatureMap mlp = ctx.resolve(l, Module::mlp, compute, part.mlp);
    if (!mlp.same_shape(hidden)) {
      throw PolicyError("cache context returned a malformed mlp estimate");
    }
    hidden += mlp;
    ctx.observe(l, hidden);
  }
  return model.project_out(hidden);
}

}  // namespace clusca
