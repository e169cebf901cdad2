#include "dta/ablations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dta/data.hpp"

namespace dta {

static SparsifiedSelection selection_from_indices(const TokenSet& tokens,
                                                  std::vector<int> indices) {
  SparsifiedSelection sel;
  sel.features = gather_rows(tokens.features, indices);
  sel.coords.resize(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t i = 0; i < indices.size(); ++i)
    sel.coords.row(static_cast<Eigen::Index>(i)) = tokens.coords.row(indices[i]);
  sel.indices = std::move(indices);
  // Uniform placeholder weights; these samplers carry no gradient path.
  Tape& t = *tokens.features.tape;
  sel.soft_weights = constant(
      t, Mat::Constant(1, tokens.count(), 1.0 / tokens.count()));
  return sel;
}

SparsifiedSelection random_sample(const TokenSet& tokens, int h,
                                  RngState& rng) {
  const int n = tokens.count();
  if (h < 1 || h > n) throw InvalidInput("random_sample: H out of range");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < h; ++i) {
    std::size_t j = i + rng.below(static_cast<std::uint64_t>(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(h);
  return selection_from_indices(tokens, std::move(pool));
}

SparsifiedSelection fps_sample(const TokenSet& tokens, int h) {
  if (h < 1 || h > tokens.count())
    throw InvalidInput("fps_sample: H out of range");
  return selection_from_indices(tokens, fps(tokens.coords, h));
}

// Indices of the k nearest rows of `coords` to `query`, ties by lower index.
static std::vector<int> knn_indices(const Eigen::RowVector3d& query,
                                    const Mat& coords, int k) {
  std::vector<int> order(coords.rows());
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd d = (coords.rowwise() - query).rowwise().squaredNorm();
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return d(a) < d(b); });
  order.resize(k);
  return order;
}

// Max over row groups of a: out.row(g) = max over rows in groups[g].
static Var group_max_rows(Var a, const std::vector<std::vector<int>>& groups) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out(static_cast<Eigen::Index>(groups.size()), a.cols());
  std::vector<std::vector<int>> argmax(groups.size(),
                                       std::vector<int>(a.cols()));
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      int best = groups[g][0];
      for (int r : groups[g])
        if (a.val()(r, j) > a.val()(best, j)) best = r;
      out(static_cast<Eigen::Index>(g), j) = a.val()(best, j);
      argmax[g][j] = best;
    }
  int id = t.add(std::move(out), [ia, argmax, self = (int)t.size()](Tape& t) {
    for (std::size_t g = 0; g < argmax.size(); ++g)
      for (std::size_t j = 0; j < argmax[g].size(); ++j)
        t.grad(ia)(argmax[g][j], static_cast<Eigen::Index>(j)) +=
            t.grad(self)(static_cast<Eigen::Index>(g),
                         static_cast<Eigen::Index>(j));
  });
  return Var{&t, id};
}

Var KnnMlpBlock::aggregate(TapeParams& p, const Mat& s_coords,
                           const TokenSet& tokens) const {
  if (k > tokens.count()) throw InvalidInput("knn_mlp: k exceeds N");
  Var mapped = mlp.forward(p, tokens.features);
  std::vector<std::vector<int>> groups(s_coords.rows());
  for (Eigen::Index i = 0; i < s_coords.rows(); ++i)
    groups[i] = knn_indices(s_coords.row(i), tokens.coords, k);
  return group_max_rows(mapped, groups);
}

WCAMap vca_map(Var q, Var k, Var bias, int d) {
  Var ones = constant(*q.tape, Mat::Ones(k.rows(), 1));
  return wca_map(q, k, ones, bias, d);
}

Var interpolate_up(Var s, const Mat& s_coords, const Mat& t_coords,
                   InterpMode mode) {
  const int h = static_cast<int>(s_coords.rows());
  const int n = static_cast<int>(t_coords.rows());
  Mat weights = Mat::Zero(n, h);
  const int use = mode == InterpMode::Nearest ? 1 : std::min(3, h);
  for (int i = 0; i < n; ++i) {
    std::vector<int> nbr = knn_indices(t_coords.row(i), s_coords, use);
    double d0 =
        (s_coords.row(nbr[0]) - t_coords.row(i)).squaredNorm();
    if (mode == InterpMode::Nearest || d0 == 0.0) {
      weights(i, nbr[0]) = 1.0;
      continue;
    }
    double total = 0.0;
    for (int j : nbr) {
      double d2 = (s_coords.row(j) - t_coords.row(i)).squaredNorm();
      weights(i, j) = 1.0 / d2;
      total += weights(i, j);
    }
    weights.row(i) /= total;
  }
  return matmul(constant(*s.tape, std::move(weights)), s);
}

}  // namespace dta
