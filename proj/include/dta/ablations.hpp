#pragma once

#include "dta/dta_block.hpp"
#include "dta/lts.hpp"

namespace dta {

enum class InterpMode { Trilinear, Nearest };

// Uniform sampling without replacement; deterministic under seed.
SparsifiedSelection random_sample(const TokenSet& tokens, int h, RngState& rng);

// Farthest-point sampling over token coordinates (seed index 0).
SparsifiedSelection fps_sample(const TokenSet& tokens, int h);

// Local aggregation baseline: per sparsified token, shared MLP over the k
// nearest full-set tokens (coordinate distance, ties by lower index),
// max-pooled per neighborhood.
struct KnnMlpBlock {
  Mlp2 mlp;
  int k = 16;

  KnnMlpBlock() = default;
  KnnMlpBlock(std::string prefix, int d, int k_neighbors)
      : mlp{prefix, d, d, d}, k(k_neighbors) {}

  void init(ParamStore& ps, RngState& rng) const { mlp.init(ps, rng); }
  Var aggregate(TapeParams& p, const Mat& s_coords, const TokenSet& tokens) const;
};

// Weighted cross-attention map with Pi replaced by all-ones (vanilla
// cross-attention).
WCAMap vca_map(Var q, Var k, Var bias, int d);

// Interpolation-based upsampling: 3-neighbor inverse-square-distance
// weights (trilinear convention) or single nearest neighbor copy.
Var interpolate_up(Var s, const Mat& s_coords, const Mat& t_coords,
                   InterpMode mode);

}  // namespace dta
