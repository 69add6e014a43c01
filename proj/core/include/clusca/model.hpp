#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "clusca/feature_map.hpp"

namespace clusca {

struct ModelConfig {
  std::size_t depth = 6;
  std::size_t grid_h = 16;
  std::size_t grid_w = 16;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t num_classes = 10;
  std::uint64_t weight_seed = 0;

  std::size_t tokens() const noexcept { return grid_h * grid_w; }
  std::size_t mlp_hidden() const noexcept { return 4 * dim; }
  std::size_t head_dim() const noexcept { return dim / heads; }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Cached units of a block. `block` denotes the block output (residual stream
// after the MLP) and is only ever observed, never cached.
enum class Module { attention, mlp, block };

std::string_view to_string(Module m) noexcept;
Module module_from_string(std::string_view name);

struct BlockWeights {
  FeatureMap query, key, value, output;  // D x D
  FeatureMap mlp_in;                     // D x 4D
  FeatureMap mlp_out;                    // 4D x D
  std::vector<double> norm1_gain, norm1_bias;
  std::vector<double> norm2_gain, norm2_bias;
  // Conditioning enters as cond * shift added after each layer norm.
  std::vector<double> shift1, shift2;
};

// Sorted, distinct token indices. May be empty or cover every token.
class ComputeSet {
 public:
  ComputeSet() = default;

  static ComputeSet all(std::size_t tokens);
  // Sorts and removes duplicates; throws BoundsError for any index >= tokens.
  static ComputeSet from_indices(std::vector<std::size_t> indices, std::size_t tokens);

  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  bool covers(std::size_t tokens) const noexcept { return indices_.size() == tokens; }
  bool contains(std::size_t index) const noexcept;

  friend bool operator==(const ComputeSet&, const ComputeSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

// Module outputs (branch values, before the residual add) for the tokens of
// `compute`, in the order of compute.indices().
struct PartialOutputs {
  ComputeSet compute;
  FeatureMap attention;
  FeatureMap mlp;
};

class Model {
 public:
  // Draws every matrix from N(0, 1/D) using the weight stream of
  // cfg.weight_seed. Layer-norm gains start at 1 and biases at 0.
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  std::span<const BlockWeights> blocks() const noexcept { return blocks_; }

  // Input projection plus fixed positional embedding.
  FeatureMap embed(const FeatureMap& latent) const;
  // Class embedding plus sinusoidal timestep embedding, length D.
  std::vector<double> conditioning(std::size_t timestep, std::size_t class_label) const;
  // Final layer norm and output projection.
  FeatureMap project_out(const FeatureMap& hidden) const;

  friend bool operator==(const Model& a, const Model& b);

 private:
  ModelConfig cfg_;
  std::vector<BlockWeights> blocks_;
  FeatureMap input_proj_;
  FeatureMap position_;
  FeatureMap class_embed_;
  std::vector<double> final_gain_, final_bias_;
  FeatureMap output_proj_;
};

bool operator==(const BlockWeights& a, const BlockWeights& b);

Model init_model(const ModelConfig& cfg);

inline constexpr double kNormEps = 1e-6;

// One transformer block restricted to the tokens of `compute`. Queries come
// from the compute rows only; keys and values are formed from all T rows of
// `features`, which is the current best estimate of every token. The MLP
// consumes features[i] + attention[i] for each computed token i.
PartialOutputs block_forward(const BlockWeights& block, const ModelConfig& cfg,
                             const FeatureMap& features, std::span<const double> cond,
                             const ComputeSet& compute);

// Per-run cache protocol consulted by predict_noise for every block.
class CacheContext {
 public:
  virtual ~CacheContext() = default;

  // Tokens to compute in block `layer` at the current step.
  virtual ComputeSet compute_set(std::size_t layer) = 0;

  // Turns freshly computed rows of one module into a full T x D estimate,
  // recording whatever the policy needs for later steps.
  virtual FeatureMap resolve(std::size_t layer, Module module, const ComputeSet& compute,
                             const FeatureMap& computed) = 0;

  // Sees the assembled residual stream after block `layer`.
  virtual void observe(std::size_t layer, const FeatureMap& block_output) {
    (void)layer;
    (void)block_output;
  }
};

// Computes every token of every module; no caching.
class FullComputeContext final : public CacheContext {
 public:
  explicit FullComputeContext(std::size_t tokens) : tokens_(tokens) {}

  ComputeSet compute_set(std::size_t) override { return ComputeSet::all(tokens_); }
  FeatureMap resolve(std::size_t layer, Module module, const ComputeSet& compute,
                     const FeatureMap& computed) override;

 private:
  std::size_t tokens_;
};

// Noise estimate for latent x_t at `timestep`. Each module output is either
// computed or supplied by `ctx`.
FeatureMap predict_noise(const Model& model, const FeatureMap& latent, std::size_t timestep,
                         std::size_t class_label, CacheContext& ctx);

}  // namespace clusca
