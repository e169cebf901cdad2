#pragma once

#include "dta/numerics.hpp"

namespace dta {

// Global Feature Enhancement: dual point-wise/channel-wise self-attention
// with shared Q/K/V projections, fused by a residual LBR.
struct GfeBlock {
  std::string prefix;
  int width = 0;
  PositionBias pos_bias;
  Linear fuse_mlp;  // D -> D
  Lbr out_lbr;      // D -> D

  GfeBlock() = default;
  GfeBlock(std::string pfx, int d)
      : prefix(std::move(pfx)),
        width(d),
        pos_bias{prefix + ".pos", std::max(8, d / 4)},
        fuse_mlp{prefix + ".fuse", d, d},
        out_lbr{prefix + ".out", d, d} {}

  void init(ParamStore& ps, RngState& rng) const {
    ps.add_uniform(prefix + ".wq", width, width, rng);
    ps.add_uniform(prefix + ".wk", width, width, rng);
    ps.add_uniform(prefix + ".wv", width, width, rng);
    pos_bias.init(ps, rng);
    fuse_mlp.init(ps, rng);
    out_lbr.init(ps, rng);
  }

  Var pointwise_attention(TapeParams& p, Var s, const Mat& coords) const;
  Var channelwise_attention(TapeParams& p, Var s) const;
  Var fuse(TapeParams& p, Var s, Var f_p, Var f_c, bool training) const;

  // Full block; either branch can be disabled for ablation.
  Var forward(TapeParams& p, Var s, const Mat& coords, bool training,
              bool pointwise_on = true, bool channelwise_on = true) const;
};

}  // namespace dta
