#pragma once

#include <vector>

#include "dta/numerics.hpp"

namespace dta {

// Ordered token collection: NxD features on the tape plus their fixed
// 3D coordinates.
struct TokenSet {
  Var features;
  Mat coords;

  int count() const { return static_cast<int>(features.rows()); }
  int width() const { return static_cast<int>(features.cols()); }
};

// Keep/drop probabilities per token. phi is Nx2 row-stochastic; pi is the
// keep column phi[:,0] as an Nx1 on the tape so gradients flow into WCA.
struct DecisionScores {
  Var phi;
  Var pi;
};

// The H selected tokens. Features are exact rows of the source set;
// soft_weights (1xN) carry the straight-through gradient path.
struct SparsifiedSelection {
  std::vector<int> indices;
  Var features;
  Mat coords;
  Var soft_weights;
};

// Learnable Token Sparsification: GLocal embedding, decision scoring,
// Gumbel top-H selection.
struct LtsBlock {
  Mlp2 local_mlp;     // D -> D/2 -> D/2
  Mlp2 global_mlp;    // D -> D/2 -> D/2
  Linear score_mlp;   // D -> 2
  int width = 0;

  LtsBlock() = default;
  LtsBlock(std::string prefix, int d)
      : local_mlp{prefix + ".local", d, d / 2, d / 2},
        global_mlp{prefix + ".global", d, d / 2, d / 2},
        score_mlp{prefix + ".score", d, 2},
        width(d) {
    if (d % 2 != 0) throw ShapeError("lts: token width must be even");
  }

  void init(ParamStore& ps, RngState& rng) const {
    local_mlp.init(ps, rng);
    global_mlp.init(ps, rng);
    score_mlp.init(ps, rng);
  }

  // Per-row [local, global] concatenation, width D (Eqs. 1-3 analogue).
  Var glocal_embed(TapeParams& p, const TokenSet& tokens) const;

  DecisionScores decision_scores(TapeParams& p, Var glocal) const;

  SparsifiedSelection sparsify(const TokenSet& tokens,
                               const DecisionScores& scores, int h,
                               double temperature, RngState& rng,
                               bool training) const;
};

}  // namespace dta
