#include "dta/itr.hpp"

namespace dta {

Var reconstruct(Var s, Var t_full, const WCAMap& wm) {
  if (s.cols() != t_full.cols())
    throw ShapeError("reconstruct: S and T widths differ");
  if (wm.wm.rows() != s.rows() || wm.wm.cols() != t_full.rows())
    throw ShapeError("reconstruct: WCA-map shape mismatch");
  Var weights = row_softmax(transpose(wm.wm));  // NxH, rows sum to 1
  return add(matmul(weights, s), t_full);
}

}  // namespace dta
