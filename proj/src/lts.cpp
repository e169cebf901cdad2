#include "dta/lts.hpp"

#include <cmath>

namespace dta {

Var LtsBlock::glocal_embed(TapeParams& p, const TokenSet& tokens) const {
  if (tokens.width() != width) throw ShapeError("lts: token width mismatch");
  Var local = local_mlp.forward(p, tokens.features);
  Var global = mean_rows(global_mlp.forward(p, tokens.features));
  return concat_cols(local, repeat_row(global, tokens.count()));
}

DecisionScores LtsBlock::decision_scores(TapeParams& p, Var glocal) const {
  Var phi = row_softmax(score_mlp.forward(p, glocal));
  return DecisionScores{phi, col(phi, 0)};
}

SparsifiedSelection LtsBlock::sparsify(const TokenSet& tokens,
                                       const DecisionScores& scores, int h,
                                       double temperature, RngState& rng,
                                       bool training) const {
  if (h > tokens.count()) throw InvalidInput("sparsify: H exceeds N");
  // Gumbel top-H operates on logits; keep probabilities are mapped through
  // a clamped log.
  Var keep_logits = cwise(
      transpose(scores.pi),
      [](double v) { return std::log(v + 1e-12); },
      [](double v) { return 1.0 / (v + 1e-12); });
  TopHSelection top = gumbel_top_h(keep_logits, h, temperature, rng, training);
  SparsifiedSelection sel;
  sel.indices = top.indices;
  sel.soft_weights = top.soft_weights;
  sel.features = gather_rows(tokens.features, top.indices);
  sel.coords.resize(h, 3);
  for (int i = 0; i < h; ++i) sel.coords.row(i) = tokens.coords.row(top.indices[i]);
  return sel;
}

}  // namespace dta
