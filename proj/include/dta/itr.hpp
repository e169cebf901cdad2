#pragma once

#include "dta/dta_block.hpp"

namespace dta {

// Iterative Token Reconstruction: T_out = softmax(WM^T) S + T, with the
// softmax normalizing each original token's weights over the H sources.
Var reconstruct(Var s, Var t_full, const WCAMap& wm);

}  // namespace dta
