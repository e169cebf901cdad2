#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dta/params.hpp"

namespace dta {

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  double tol = 1e-3;
  bool pass = false;
};

// Central finite differences (step h) on every trainable parameter vs the
// tape gradient; returns the worst relative error. The loss builder must be
// a pure function of the store values (it may reseed its own RNG).
double max_param_rel_err(
    ParamStore& ps,
    const std::function<Var(Tape&, TapeParams&)>& loss_fn,
    double h = 1e-4);

// Finite-difference suites for every block plus the end-to-end toy model.
std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed = 42);

// Self-check of the harness: a wca_map with the bias sign flipped must be
// caught against the brute-force evaluation.
bool mutation_fixture_detected();

}  // namespace dta
