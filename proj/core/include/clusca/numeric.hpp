#pragma once

#include <cstddef>
#include <span>

#include "clusca/feature_map.hpp"
#include "clusca/rng.hpp"

namespace clusca {

// Standard matrix product. Throws ShapeError unless a.cols() == b.rows().
FeatureMap matmul(const FeatureMap& a, const FeatureMap& b);

// a * b^T without materialising the transpose.
FeatureMap matmul_transposed(const FeatureMap& a, const FeatureMap& b);

FeatureMap transpose(const FeatureMap& m);

// Row-wise softmax with max subtraction.
FeatureMap softmax_rows(const FeatureMap& m);

// Per-row normalisation to zero mean / unit (population) variance, then
// gain * x + bias. eps is added to the variance before the square root.
FeatureMap layer_norm(const FeatureMap& m, std::span<const double> gain,
                      std::span<const double> bias, double eps);

// rows x cols matrix of standard-normal draws taken in row-major order.
FeatureMap seeded_gaussian(std::size_t rows, std::size_t cols, SeededRng& rng);

// tanh approximation of GELU, in place.
void gelu_inplace(FeatureMap& m) noexcept;

double frobenius_norm(const FeatureMap& m) noexcept;

}  // namespace clusca
