#include "dta/dta_block.hpp"

#include <cmath>

namespace dta {

DtaBlock::Qkv DtaBlock::project_qkv(TapeParams& p, Var s, Var t) const {
  if (s.cols() != width || t.cols() != width)
    throw ShapeError("dta: token width mismatch");
  return Qkv{matmul(s, p(prefix + ".wq")), matmul(t, p(prefix + ".wk")),
             matmul(t, p(prefix + ".wv"))};
}

WCAMap wca_map(Var q, Var k, Var pi, Var bias, int d) {
  if (pi.cols() != 1) throw ShapeError("wca_map: pi must be Nx1");
  if (pi.rows() != k.rows()) throw ShapeError("wca_map: pi length != N");
  const int h = static_cast<int>(q.rows());
  Var scaled = scale(matmul(q, transpose(k)), 1.0 / std::sqrt((double)d));
  Var pre = add(scaled, bias);
  Var pi_rows = repeat_row(transpose(pi), h);
  Var logits = hadamard(pi_rows, pre);
  return WCAMap{row_softmax(logits), logits};
}

Var aggregate(const WCAMap& wm, Var v) {
  if (wm.wm.cols() != v.rows()) throw ShapeError("aggregate: shape mismatch");
  return matmul(wm.wm, v);
}

}  // namespace dta
