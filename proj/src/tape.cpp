#include "dta/tape.hpp"

#include <cmath>

namespace dta {

int Tape::add(Mat value, std::function<void(Tape&)> backward) {
  Node n;
  n.grad = Mat::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size() - 1);
}

void Tape::backward(int loss_id) {
  if (nodes_[loss_id].value.size() != 1)
    throw ShapeError("backward: loss must be scalar");
  nodes_[loss_id].grad(0, 0) = 1.0;
  for (int i = loss_id; i >= 0; --i) {
    if (nodes_[i].backward) nodes_[i].backward(*this);
  }
}

Var constant(Tape& t, Mat m) { return Var{&t, t.add(std::move(m))}; }

static void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("vars from different tapes");
}

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dims mismatch");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.add(a.val() * b.val(), [ia, ib, self = (int)t.size()](Tape& t) {
    const Mat& g = t.grad(self);
    t.grad(ia) += g * t.val(ib).transpose();
    t.grad(ib) += t.val(ia).transpose() * g;
  });
  return Var{&t, id};
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.add(a.val().transpose(), [ia, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self).transpose();
  });
  return Var{&t, id};
}

Var add(Var a, Var b) {
  check_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("add: shape mismatch");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.add(a.val() + b.val(), [ia, ib, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self);
    t.grad(ib) += t.grad(self);
  });
  return Var{&t, id};
}

Var sub(Var a, Var b) {
  check_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("sub: shape mismatch");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.add(a.val() - b.val(), [ia, ib, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self);
    t.grad(ib) -= t.grad(self);
  });
  return Var{&t, id};
}

Var hadamard(Var a, Var b) {
  check_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("hadamard: shape mismatch");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.add(a.val().cwiseProduct(b.val()),
                 [ia, ib, self = (int)t.size()](Tape& t) {
                   t.grad(ia) += t.grad(self).cwiseProduct(t.val(ib));
                   t.grad(ib) += t.grad(self).cwiseProduct(t.val(ia));
                 });
  return Var{&t, id};
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.add(a.val() * s, [ia, s, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self) * s;
  });
  return Var{&t, id};
}

Var add_scalar(Var a, double s) {
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.add(a.val().array() + s, [ia, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self);
  });
  return Var{&t, id};
}

Var relu(Var a) {
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.add(a.val().cwiseMax(0.0), [ia, self = (int)t.size()](Tape& t) {
    t.grad(ia) +=
        t.grad(self).cwiseProduct((t.val(ia).array() > 0.0).cast<double>().matrix());
  });
  return Var{&t, id};
}

Var cwise(Var a, std::function<double(double)> f,
          std::function<double(double)> fp) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v = a.val().unaryExpr([&](double x) { return f(x); });
  int id = t.add(std::move(v), [ia, fp, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self).cwiseProduct(
        t.val(ia).unaryExpr([&](double x) { return fp(x); }));
  });
  return Var{&t, id};
}

Var row_softmax(Var a) {
  if (!a.val().allFinite())
    throw InvalidInput("row_softmax: non-finite input");
  Tape& t = *a.tape;
  int ia = a.id;
  Mat s(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double m = a.val().row(i).maxCoeff();
    Eigen::ArrayXd e = (a.val().row(i).array() - m).exp();
    s.row(i) = (e / e.sum()).matrix();
  }
  int id = t.add(std::move(s), [ia, self = (int)t.size()](Tape& t) {
    const Mat& s = t.val(self);
    const Mat& gy = t.grad(self);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      double dot = s.row(i).dot(gy.row(i));
      t.grad(ia).row(i) +=
          s.row(i).cwiseProduct(gy.row(i)) - dot * s.row(i);
    }
  });
  return Var{&t, id};
}

Var logsumexp_rows(Var a) {
  if (!a.val().allFinite())
    throw InvalidInput("logsumexp_rows: non-finite input");
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double m = a.val().row(i).maxCoeff();
    out(i, 0) = m + std::log((a.val().row(i).array() - m).exp().sum());
  }
  int id = t.add(std::move(out), [ia, self = (int)t.size()](Tape& t) {
    const Mat& x = t.val(ia);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double m = x.row(i).maxCoeff();
      Eigen::ArrayXd e = (x.row(i).array() - m).exp();
      t.grad(ia).row(i) += (t.grad(self)(i, 0) * (e / e.sum())).matrix();
    }
  });
  return Var{&t, id};
}

Var mean_rows(Var a) {
  Tape& t = *a.tape;
  int ia = a.id;
  double inv_n = 1.0 / static_cast<double>(a.rows());
  Mat out = a.val().colwise().mean();
  int id = t.add(std::move(out), [ia, inv_n, self = (int)t.size()](Tape& t) {
    const Mat& g = t.grad(self);
    t.grad(ia).rowwise() += (g.row(0) * inv_n);
  });
  return Var{&t, id};
}

Var max_rows(Var a) {
  Tape& t = *a.tape;
  int ia = a.id;
  std::vector<int> argmax(a.cols());
  Mat out(1, a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Eigen::Index r;
    out(0, j) = a.val().col(j).maxCoeff(&r);
    argmax[j] = static_cast<int>(r);
  }
  int id = t.add(std::move(out),
                 [ia, argmax, self = (int)t.size()](Tape& t) {
                   for (std::size_t j = 0; j < argmax.size(); ++j)
                     t.grad(ia)(argmax[j], j) += t.grad(self)(0, j);
                 });
  return Var{&t, id};
}

Var repeat_row(Var a, int n) {
  if (a.rows() != 1) throw ShapeError("repeat_row: expects 1xD");
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out = a.val().replicate(n, 1);
  int id = t.add(std::move(out), [ia, self = (int)t.size()](Tape& t) {
    t.grad(ia).row(0) += t.grad(self).colwise().sum();
  });
  return Var{&t, id};
}

Var concat_cols(Var a, Var b) {
  check_same_tape(a, b);
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row mismatch");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int ca = static_cast<int>(a.cols());
  Mat out(a.rows(), a.cols() + b.cols());
  out << a.val(), b.val();
  int id = t.add(std::move(out), [ia, ib, ca, self = (int)t.size()](Tape& t) {
    const Mat& g = t.grad(self);
    t.grad(ia) += g.leftCols(ca);
    t.grad(ib) += g.rightCols(g.cols() - ca);
  });
  return Var{&t, id};
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty input");
  Tape& t = *parts[0].tape;
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> heights;
  for (const Var& p : parts) {
    check_same_tape(parts[0], p);
    if (p.cols() != parts[0].cols())
      throw ShapeError("concat_rows: column mismatch");
    ids.push_back(p.id);
    heights.push_back(p.rows());
    rows += p.rows();
  }
  Mat out(rows, parts[0].cols());
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.val();
    r += p.rows();
  }
  int id = t.add(std::move(out),
                 [ids, heights, self = (int)t.size()](Tape& t) {
                   Eigen::Index r = 0;
                   for (std::size_t i = 0; i < ids.size(); ++i) {
                     t.grad(ids[i]) += t.grad(self).middleRows(r, heights[i]);
                     r += heights[i];
                   }
                 });
  return Var{&t, id};
}

Var slice_rows(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ShapeError("slice_rows: range out of bounds");
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out = a.val().middleRows(start, count);
  int id = t.add(std::move(out),
                 [ia, start, count, self = (int)t.size()](Tape& t) {
                   t.grad(ia).middleRows(start, count) += t.grad(self);
                 });
  return Var{&t, id};
}

Var gather_rows(Var a, const std::vector<int>& idx) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.rows())
      throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.val().row(idx[i]);
  }
  int id = t.add(std::move(out), [ia, idx, self = (int)t.size()](Tape& t) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      t.grad(ia).row(idx[i]) += t.grad(self).row(static_cast<Eigen::Index>(i));
  });
  return Var{&t, id};
}

Var col(Var a, int j) {
  if (j < 0 || j >= a.cols()) throw ShapeError("col: index out of range");
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.add(a.val().col(j), [ia, j, self = (int)t.size()](Tape& t) {
    t.grad(ia).col(j) += t.grad(self);
  });
  return Var{&t, id};
}

Var pick(Var a, const std::vector<int>& idx) {
  if (static_cast<Eigen::Index>(idx.size()) != a.rows())
    throw ShapeError("pick: index count != rows");
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.cols())
      throw ShapeError("pick: column index out of range");
    out(i, 0) = a.val()(i, idx[i]);
  }
  int id = t.add(std::move(out), [ia, idx, self = (int)t.size()](Tape& t) {
    for (Eigen::Index i = 0; i < t.val(self).rows(); ++i)
      t.grad(ia)(i, idx[i]) += t.grad(self)(i, 0);
  });
  return Var{&t, id};
}

Var reshape_rowmajor(Var a, int rows, int cols) {
  if (a.rows() * a.cols() != static_cast<Eigen::Index>(rows) * cols)
    throw ShapeError("reshape: element count mismatch");
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out(rows, cols);
  {
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j, ++k)
        out(k / cols, k % cols) = a.val()(i, j);
  }
  int id = t.add(std::move(out), [ia, self = (int)t.size()](Tape& t) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(ia);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < ga.rows(); ++i)
      for (Eigen::Index j = 0; j < ga.cols(); ++j, ++k)
        ga(i, j) += g(k / g.cols(), k % g.cols());
  });
  return Var{&t, id};
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat out(1, 1);
  out(0, 0) = a.val().sum();
  int id = t.add(std::move(out), [ia, self = (int)t.size()](Tape& t) {
    t.grad(ia).array() += t.grad(self)(0, 0);
  });
  return Var{&t, id};
}

Var add_rowvec(Var a, Var v) {
  check_same_tape(a, v);
  if (v.rows() != 1 || v.cols() != a.cols())
    throw ShapeError("add_rowvec: shape mismatch");
  Tape& t = *a.tape;
  int ia = a.id, iv = v.id;
  Mat out = a.val().rowwise() + v.val().row(0);
  int id = t.add(std::move(out), [ia, iv, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self);
    t.grad(iv).row(0) += t.grad(self).colwise().sum();
  });
  return Var{&t, id};
}

Var mul_rowvec(Var a, Var v) {
  check_same_tape(a, v);
  if (v.rows() != 1 || v.cols() != a.cols())
    throw ShapeError("mul_rowvec: shape mismatch");
  Tape& t = *a.tape;
  int ia = a.id, iv = v.id;
  Mat out = a.val().array().rowwise() * v.val().row(0).array();
  int id = t.add(std::move(out), [ia, iv, self = (int)t.size()](Tape& t) {
    const Mat& g = t.grad(self);
    t.grad(ia) += (g.array().rowwise() * t.val(iv).row(0).array()).matrix();
    t.grad(iv).row(0) += g.cwiseProduct(t.val(ia)).colwise().sum();
  });
  return Var{&t, id};
}

Var add_colvec(Var a, Var v) {
  check_same_tape(a, v);
  if (v.cols() != 1 || v.rows() != a.rows())
    throw ShapeError("add_colvec: shape mismatch");
  Tape& t = *a.tape;
  int ia = a.id, iv = v.id;
  Mat out = a.val().colwise() + v.val().col(0);
  int id = t.add(std::move(out), [ia, iv, self = (int)t.size()](Tape& t) {
    t.grad(ia) += t.grad(self);
    t.grad(iv).col(0) += t.grad(self).rowwise().sum();
  });
  return Var{&t, id};
}

}  // namespace dta
