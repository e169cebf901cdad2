#pragma once

#include "dta/numerics.hpp"

namespace dta {

// Row-stochastic HxN weighted cross-attention map, with the pre-softmax
// logits retained for diagnostics.
struct WCAMap {
  Var wm;
  Var logits;
};

// Dynamic Token Aggregating: weighted cross-attention from the sparsified
// set onto the full set.
struct DtaBlock {
  std::string prefix;
  int width = 0;

  DtaBlock() = default;
  DtaBlock(std::string pfx, int d) : prefix(std::move(pfx)), width(d) {}

  void init(ParamStore& ps, RngState& rng) const {
    ps.add_uniform(prefix + ".wq", width, width, rng);
    ps.add_uniform(prefix + ".wk", width, width, rng);
    ps.add_uniform(prefix + ".wv", width, width, rng);
  }

  struct Qkv {
    Var q, k, v;
  };
  Qkv project_qkv(TapeParams& p, Var s, Var t) const;
};

// WM = row_softmax(Pi ⊙ (Q K^T / sqrt(D) + B)), Pi broadcast by row
// repetition. pi is Nx1 on the tape, bias is HxN.
WCAMap wca_map(Var q, Var k, Var pi, Var bias, int d);

// Aggregated tokens WM · V; each row a convex combination of V's rows.
Var aggregate(const WCAMap& wm, Var v);

}  // namespace dta
