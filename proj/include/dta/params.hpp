#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "dta/rng.hpp"
#include "dta/tape.hpp"

namespace dta {

// Named parameter tensors plus their gradient accumulators. Names are
// unique; shapes are fixed at registration. Entries whose name contains
// ".running_" hold batch-norm statistics and are skipped by the optimizer.
class ParamStore {
 public:
  struct Entry {
    Mat value;
    Mat grad;
  };

  Mat& add(const std::string& name, int rows, int cols) {
    if (entries_.count(name))
      throw std::logic_error("duplicate parameter: " + name);
    Entry e{Mat::Zero(rows, cols), Mat::Zero(rows, cols)};
    return entries_.emplace(name, std::move(e)).first->second.value;
  }

  // Fan-in-scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mat& add_uniform(const std::string& name, int rows, int cols,
                   RngState& rng) {
    Mat& m = add(name, rows, cols);
    double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = rng.uniform(-bound, bound);
    return m;
  }

  bool has(const std::string& name) const { return entries_.count(name) > 0; }

  Mat& value(const std::string& name) { return at(name).value; }
  const Mat& value(const std::string& name) const { return at(name).value; }
  Mat& grad(const std::string& name) { return at(name).grad; }

  void zero_grads() {
    for (auto& [k, e] : entries_) e.grad.setZero();
  }

  void scale_grads(double s) {
    for (auto& [k, e] : entries_) e.grad *= s;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }

  static bool trainable(const std::string& name) {
    return name.find(".running_") == std::string::npos;
  }

 private:
  Entry& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::logic_error("unknown parameter: " + name);
    return it->second;
  }
  const Entry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::logic_error("unknown parameter: " + name);
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

// Ties a ParamStore to a Tape for one forward pass: param() creates leaf
// nodes, flush_grads() copies accumulated node gradients back.
class TapeParams {
 public:
  TapeParams(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Var operator()(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return Var{&tape_, it->second};
    Var v = constant(tape_, store_.value(name));
    ids_.emplace(name, v.id);
    return v;
  }

  void flush_grads() {
    for (auto& [name, id] : ids_) store_.grad(name) += tape_.grad(id);
  }

  ParamStore& store() { return store_; }

 private:
  Tape& tape_;
  ParamStore& store_;
  std::map<std::string, int> ids_;
};

}  // namespace dta
