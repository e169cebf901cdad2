#include "dta/gfe.hpp"

#include <cmath>

namespace dta {

Var GfeBlock::pointwise_attention(TapeParams& p, Var s,
                                  const Mat& coords) const {
  Tape& t = *s.tape;
  Var q = matmul(s, p(prefix + ".wq"));
  Var k = matmul(s, p(prefix + ".wk"));
  Var v = matmul(s, p(prefix + ".wv"));
  Var bias = pos_bias.forward(p, t, coords, coords);
  Var att = row_softmax(
      add(scale(matmul(q, transpose(k)), 1.0 / std::sqrt((double)width)), bias));
  return matmul(att, v);
}

Var GfeBlock::channelwise_attention(TapeParams& p, Var s) const {
  Var q = matmul(s, p(prefix + ".wq"));
  Var k = matmul(s, p(prefix + ".wk"));
  Var v = matmul(s, p(prefix + ".wv"));
  // DxD channel map, scaled by sqrt(D) to match the point-wise branch.
  Var att = row_softmax(
      scale(matmul(transpose(k), q), 1.0 / std::sqrt((double)width)));
  // Raw result is DxH; transpose so the fused sum is HxD.
  return transpose(matmul(att, transpose(v)));
}

Var GfeBlock::fuse(TapeParams& p, Var s, Var f_p, Var f_c,
                   bool training) const {
  if (f_p.rows() != s.rows() || f_c.rows() != s.rows() ||
      f_p.cols() != s.cols() || f_c.cols() != s.cols())
    throw ShapeError("gfe: branch shape mismatch");
  Var fused = fuse_mlp.forward(p, add(f_p, f_c));
  return out_lbr.forward(p, add(s, fused), training);
}

Var GfeBlock::forward(TapeParams& p, Var s, const Mat& coords, bool training,
                      bool pointwise_on, bool channelwise_on) const {
  Tape& t = *s.tape;
  Var zero = constant(t, Mat::Zero(s.rows(), s.cols()));
  Var f_p = pointwise_on ? pointwise_attention(p, s, coords) : zero;
  Var f_c = channelwise_on ? channelwise_attention(p, s) : zero;
  return fuse(p, s, f_p, f_c, training);
}

}  // namespace dta
