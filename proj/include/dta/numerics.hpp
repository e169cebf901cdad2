#pragma once

#include <string>
#include <vector>

#include "dta/params.hpp"
#include "dta/rng.hpp"
#include "dta/tape.hpp"

namespace dta {

enum class Axis { Row, Col };

// Shift-invariant softmax on a plain matrix; throws InvalidInput on
// non-finite entries.
Mat stable_softmax(const Mat& x, Axis axis);

struct TopHSelection {
  std::vector<int> indices;  // hard selection, rank order
  Var soft_weights;          // 1xN softmax((logits+noise)/temperature)
};

// Differentiable top-H selection. Training mode perturbs the logits with
// i.i.d. Gumbel(0,1) noise; eval mode is a deterministic top-H with ties
// broken by lower index. Soft weights carry the straight-through gradient.
TopHSelection gumbel_top_h(Var logits, int h, double temperature,
                           RngState& rng, bool training);

// Eval-mode top-H on a plain vector (lower index wins ties).
std::vector<int> top_h_indices(const Eigen::VectorXd& v, int h);

struct Linear {
  std::string prefix;
  int in = 0, out = 0;

  void init(ParamStore& ps, RngState& rng) const {
    ps.add_uniform(prefix + ".w", in, out, rng);
    ps.add(prefix + ".b", 1, out);
  }
  Var forward(TapeParams& p, Var x) const {
    if (x.cols() != in) throw ShapeError(prefix + ": input width mismatch");
    return add_rowvec(matmul(x, p(prefix + ".w")), p(prefix + ".b"));
  }
};

// Batch normalization over the token axis per channel. Training mode uses
// batch statistics and folds them into running estimates (momentum 0.1);
// eval mode normalizes by the running statistics.
struct BatchNorm {
  std::string prefix;
  int width = 0;
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  void init(ParamStore& ps) const {
    ps.add(prefix + ".gamma", 1, width).setOnes();
    ps.add(prefix + ".beta", 1, width);
    ps.add(prefix + ".running_mean", 1, width);
    ps.add(prefix + ".running_var", 1, width).setOnes();
  }
  Var forward(TapeParams& p, Var x, bool training) const;
};

// Linear -> BatchNorm -> ReLU.
struct Lbr {
  Linear linear;
  BatchNorm bn;

  Lbr() = default;
  Lbr(std::string prefix, int in, int out)
      : linear{prefix + ".lin", in, out}, bn{prefix + ".bn", out} {}

  void init(ParamStore& ps, RngState& rng) const {
    linear.init(ps, rng);
    bn.init(ps);
  }
  Var forward(TapeParams& p, Var x, bool training) const {
    return relu(bn.forward(p, linear.forward(p, x), training));
  }
};

// Two-layer MLP with ReLU between.
struct Mlp2 {
  Linear l1, l2;

  Mlp2() = default;
  Mlp2(std::string prefix, int in, int hidden, int out)
      : l1{prefix + ".l1", in, hidden}, l2{prefix + ".l2", hidden, out} {}

  void init(ParamStore& ps, RngState& rng) const {
    l1.init(ps, rng);
    l2.init(ps, rng);
  }
  Var forward(TapeParams& p, Var x) const {
    return l2.forward(p, relu(l1.forward(p, x)));
  }
};

// Scalar relative-position bias: B[i,j] = MLP(coords_q[i] - coords_k[j])
// with a 3 -> hidden -> 1 MLP shared over all pairs.
struct PositionBias {
  Mlp2 mlp;

  PositionBias() = default;
  PositionBias(std::string prefix, int hidden)
      : mlp{prefix, 3, hidden, 1} {}

  void init(ParamStore& ps, RngState& rng) const { mlp.init(ps, rng); }
  Var forward(TapeParams& p, Tape& t, const Mat& coords_q,
              const Mat& coords_k) const;
};

}  // namespace dta
