#include "dta/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dta {

Mat stable_softmax(const Mat& x, Axis axis) {
  if (!x.allFinite()) throw InvalidInput("stable_softmax: non-finite input");
  if (axis == Axis::Col) return stable_softmax(x.transpose(), Axis::Row).transpose();
  Mat out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double m = x.row(i).maxCoeff();
    Eigen::ArrayXd e = (x.row(i).array() - m).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

std::vector<int> top_h_indices(const Eigen::VectorXd& v, int h) {
  std::vector<int> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return v(a) > v(b); });
  order.resize(h);
  return order;
}

TopHSelection gumbel_top_h(Var logits, int h, double temperature,
                           RngState& rng, bool training) {
  if (logits.rows() != 1) throw ShapeError("gumbel_top_h: expects 1xN logits");
  const int n = static_cast<int>(logits.cols());
  if (h < 1) throw InvalidInput("gumbel_top_h: H must be >= 1");
  if (h > n) throw InvalidInput("gumbel_top_h: H exceeds token count");
  if (temperature <= 0.0)
    throw InvalidInput("gumbel_top_h: temperature must be positive");

  Tape& t = *logits.tape;
  Var perturbed = logits;
  if (training) {
    Mat noise(1, n);
    for (int j = 0; j < n; ++j) noise(0, j) = rng.gumbel();
    perturbed = add(logits, constant(t, noise));
  }
  TopHSelection sel;
  sel.indices = top_h_indices(perturbed.val().row(0).transpose(), h);
  sel.soft_weights = row_softmax(scale(perturbed, 1.0 / temperature));
  return sel;
}

Var BatchNorm::forward(TapeParams& p, Var x, bool training) const {
  if (x.cols() != width) throw ShapeError(prefix + ": width mismatch");
  Tape& t = *x.tape;
  Var xn{nullptr, -1};
  if (training) {
    Var mu = mean_rows(x);
    Var xc = sub(x, repeat_row(mu, static_cast<int>(x.rows())));
    Var var = mean_rows(hadamard(xc, xc));
    Var inv_std = cwise(
        add_scalar(var, kEps),
        [](double v) { return 1.0 / std::sqrt(v); },
        [](double v) { return -0.5 / (v * std::sqrt(v)); });
    xn = mul_rowvec(xc, inv_std);
    // Fold the batch statistics into the running estimates.
    Mat& rm = p.store().value(prefix + ".running_mean");
    Mat& rv = p.store().value(prefix + ".running_var");
    rm = (1.0 - kMomentum) * rm + kMomentum * mu.val();
    rv = (1.0 - kMomentum) * rv + kMomentum * var.val();
  } else {
    const Mat& rm = p.store().value(prefix + ".running_mean");
    const Mat& rv = p.store().value(prefix + ".running_var");
    Mat inv_std = (rv.array() + kEps).rsqrt();
    Var centered = add_rowvec(x, constant(t, -rm));
    xn = mul_rowvec(centered, constant(t, inv_std));
  }
  return add_rowvec(mul_rowvec(xn, p(prefix + ".gamma")), p(prefix + ".beta"));
}

Var PositionBias::forward(TapeParams& p, Tape& t, const Mat& coords_q,
                          const Mat& coords_k) const {
  if (coords_q.cols() != 3 || coords_k.cols() != 3)
    throw ShapeError("position_bias: coords must be Nx3");
  if (!coords_q.allFinite() || !coords_k.allFinite())
    throw InvalidInput("position_bias: non-finite coordinates");
  const Eigen::Index h = coords_q.rows(), n = coords_k.rows();
  Mat diff(h * n, 3);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      diff.row(i * n + j) = coords_q.row(i) - coords_k.row(j);
  Var flat = mlp.forward(p, constant(t, std::move(diff)));  // (H*N)x1
  return reshape_rowmajor(flat, static_cast<int>(h), static_cast<int>(n));
}

}  // namespace dta
