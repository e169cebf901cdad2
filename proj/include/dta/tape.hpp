#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dta {

using Mat = Eigen::MatrixXd;

// Reverse-mode autodiff tape over dense double matrices. One tape per
// forward pass; nodes are append-only and backward() walks them in
// reverse creation order.
class Tape {
 public:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> backward;
  };

  int add(Mat value, std::function<void(Tape&)> backward = nullptr);

  const Mat& val(int id) const { return nodes_[id].value; }
  Mat& grad(int id) { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1.
  void backward(int loss_id);

 private:
  std::vector<Node> nodes_;
};

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Mat& val() const { return tape->val(id); }
  const Mat& grad() const { return tape->grad(id); }
  Eigen::Index rows() const { return val().rows(); }
  Eigen::Index cols() const { return val().cols(); }
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- primitive ops -------------------------------------------------------

Var constant(Tape& t, Mat m);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var relu(Var a);
// Elementwise map with derivative f'(x); grad flows as gy * fp(x).
Var cwise(Var a, std::function<double(double)> f,
          std::function<double(double)> fp);

// Numerically stable softmax along each row; errors on non-finite input.
Var row_softmax(Var a);
// Per-row log(sum(exp(.))) as an Nx1 column.
Var logsumexp_rows(Var a);

Var mean_rows(Var a);              // NxD -> 1xD
Var max_rows(Var a);               // NxD -> 1xD, grad to argmax
Var repeat_row(Var a, int n);      // 1xD -> nxD
Var concat_cols(Var a, Var b);     // NxDa, NxDb -> Nx(Da+Db)
Var concat_rows(const std::vector<Var>& parts);  // vertical stack
Var slice_rows(Var a, int start, int count);
Var gather_rows(Var a, const std::vector<int>& idx);
Var col(Var a, int j);             // NxD -> Nx1
Var pick(Var a, const std::vector<int>& idx);  // NxK -> Nx1, a(i, idx[i])
Var reshape_rowmajor(Var a, int rows, int cols);
Var sum_all(Var a);                // -> 1x1
Var add_rowvec(Var a, Var v);      // NxD + 1xD broadcast
Var mul_rowvec(Var a, Var v);      // NxD * 1xD broadcast
Var add_colvec(Var a, Var v);      // NxD + Nx1 broadcast

}  // namespace dta
