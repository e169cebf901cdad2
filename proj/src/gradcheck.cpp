#include "dta/gradcheck.hpp"

#include <cmath>

#include "dta/ablations.hpp"
#include "dta/dta_block.hpp"
#include "dta/gfe.hpp"
#include "dta/itr.hpp"
#include "dta/lts.hpp"
#include "dta/numerics.hpp"
#include "dta/wnet.hpp"

namespace dta {

double max_param_rel_err(
    ParamStore& ps,
    const std::function<Var(Tape&, TapeParams&)>& loss_fn, double h) {
  // Analytic pass.
  ps.zero_grads();
  {
    Tape tape;
    TapeParams p(tape, ps);
    Var loss = loss_fn(tape, p);
    tape.backward(loss.id);
    p.flush_grads();
  }
  auto eval = [&]() {
    Tape tape;
    TapeParams p(tape, ps);
    return loss_fn(tape, p).val()(0, 0);
  };
  double worst = 0.0;
  for (auto& [name, e] : ps) {
    if (!ParamStore::trainable(name)) continue;
    for (Eigen::Index i = 0; i < e.value.rows(); ++i)
      for (Eigen::Index j = 0; j < e.value.cols(); ++j) {
        double saved = e.value(i, j);
        e.value(i, j) = saved + h;
        double up = eval();
        e.value(i, j) = saved - h;
        double down = eval();
        e.value(i, j) = saved;
        double numeric = (up - down) / (2.0 * h);
        double analytic = e.grad(i, j);
        double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
      }
  }
  return worst;
}

static Mat random_mat(RngState& rng, int rows, int cols, double lo = -1.0,
                      double hi = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Move every trainable parameter off its init value so the check runs at a
// generic point. Zero-init biases otherwise leave ReLU pre-activations of
// duplicate inputs sitting exactly on the kink, where central differences
// disagree with any subgradient choice.
static void jitter_params(ParamStore& ps, RngState& rng) {
  for (auto& [name, e] : ps) {
    if (!ParamStore::trainable(name)) continue;
    for (Eigen::Index i = 0; i < e.value.rows(); ++i)
      for (Eigen::Index j = 0; j < e.value.cols(); ++j)
        e.value(i, j) += rng.uniform(-0.05, 0.05);
  }
}

std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed) {
  std::vector<GradCheckReport> reports;
  auto run = [&](const std::string& name, ParamStore& ps,
                 const std::function<Var(Tape&, TapeParams&)>& fn,
                 double tol = 1e-3) {
    GradCheckReport r;
    r.name = name;
    r.tol = tol;
    r.max_rel_err = max_param_rel_err(ps, fn);
    r.pass = r.max_rel_err < tol;
    reports.push_back(r);
  };

  {  // LBR on a 4x4 input (input checked as a parameter too)
    RngState rng(seed);
    ParamStore ps;
    Lbr lbr("lbr", 4, 4);
    lbr.init(ps, rng);
    ps.value("lbr.lin.b") = random_mat(rng, 1, 4, -0.2, 0.2);
    ps.add("x", 4, 4) = random_mat(rng, 4, 4);
    run("numerics.lbr", ps, [&](Tape& t, TapeParams& p) {
      return sum_all(lbr.forward(p, p("x"), true));
    });
  }
  {  // position bias on 4x3 vs 4x3 coordinates
    RngState rng(seed + 1);
    ParamStore ps;
    PositionBias bias("pos", 8);
    bias.init(ps, rng);
    Mat cq = random_mat(rng, 4, 3), ck = random_mat(rng, 4, 3);
    run("numerics.position_bias", ps, [&, cq, ck](Tape& t, TapeParams& p) {
      return sum_all(bias.forward(p, t, cq, ck));
    });
  }
  {  // gumbel_top_h soft weights vs finite differences (temperature 1.0)
    RngState init(seed + 2);
    ParamStore ps;
    ps.add("logits", 1, 8) = random_mat(init, 1, 8);
    Mat probe = random_mat(init, 1, 8);
    run(
        "numerics.gumbel_top_h", ps,
        [&, probe](Tape& t, TapeParams& p) {
          RngState rng(seed + 3);  // identical noise every evaluation
          TopHSelection sel = gumbel_top_h(p("logits"), 3, 1.0, rng, true);
          return sum_all(hadamard(sel.soft_weights, constant(t, probe)));
        },
        1e-4);
  }
  {  // LTS: scorer gradient via the soft selection weights
    RngState rng(seed + 4);
    ParamStore ps;
    LtsBlock lts("lts", 4);
    lts.init(ps, rng);
    ps.add("tokens", 4, 4) = random_mat(rng, 4, 4);
    Mat coords = random_mat(rng, 4, 3);
    run("lts.sparsify", ps, [&, coords](Tape& t, TapeParams& p) {
      TokenSet tokens{p("tokens"), coords};
      Var glocal = lts.glocal_embed(p, tokens);
      DecisionScores scores = lts.decision_scores(p, glocal);
      RngState srng(seed + 5);
      SparsifiedSelection sel =
          lts.sparsify(tokens, scores, 2, 1.0, srng, true);
      // Soft-weighted feature mass of the selected tokens.
      Var w = gather_rows(transpose(sel.soft_weights), sel.indices);
      Var mass = matmul(sel.features, constant(t, Mat::Ones(4, 1)));
      return sum_all(hadamard(w, mass));
    });
  }
  {  // DTA: d(aggregate)/d(Q,K,V,Pi) on H=2, N=3, D=2
    RngState rng(seed + 6);
    ParamStore ps;
    DtaBlock dta("dta", 2);
    dta.init(ps, rng);
    ps.add("s", 2, 2) = random_mat(rng, 2, 2);
    ps.add("tk", 3, 2) = random_mat(rng, 3, 2);
    ps.add("pi", 3, 1) = random_mat(rng, 3, 1, 0.1, 0.9);
    Mat bias = random_mat(rng, 2, 3);
    run("dta.aggregate", ps, [&, bias](Tape& t, TapeParams& p) {
      auto qkv = dta.project_qkv(p, p("s"), p("tk"));
      WCAMap wm = wca_map(qkv.q, qkv.k, p("pi"), constant(t, bias), 2);
      return sum_all(aggregate(wm, qkv.v));
    });
  }
  {  // GFE block on H=3, D=4
    RngState rng(seed + 7);
    ParamStore ps;
    GfeBlock gfe("gfe", 4);
    gfe.init(ps, rng);
    jitter_params(ps, rng);
    ps.add("s", 3, 4) = random_mat(rng, 3, 4);
    Mat coords = random_mat(rng, 3, 3);
    run("gfe.forward", ps, [&, coords](Tape& t, TapeParams& p) {
      return sum_all(gfe.forward(p, p("s"), coords, true));
    });
  }
  {  // ITR on H=2, N=3, D=2
    RngState rng(seed + 8);
    ParamStore ps;
    ps.add("s", 2, 2) = random_mat(rng, 2, 2);
    ps.add("tk", 3, 2) = random_mat(rng, 3, 2);
    ps.add("logits", 2, 3) = random_mat(rng, 2, 3);
    run("itr.reconstruct", ps, [&](Tape& t, TapeParams& p) {
      WCAMap wm{row_softmax(p("logits")), p("logits")};
      return sum_all(reconstruct(p("s"), p("tk"), wm));
    });
  }
  {  // end-to-end toy model: N=8, D=4, 2 stages, 2 classes
    RngState rng(seed + 9);
    ModelConfig mc;
    mc.in_channels = 6;
    mc.num_classes = 2;
    mc.stages = {{4, 0.5, 1.0}, {4, 0.5, 1.0}};
    Model model(mc);
    ParamStore ps;
    model.init(ps, rng);
    jitter_params(ps, rng);
    PointCloudBlock block;
    block.points = random_mat(rng, 8, 6);
    block.labels = {0, 1, 0, 1, 1, 0, 1, 0};
    block.id = "toy";
    run("wnet.end_to_end", ps, [&](Tape& t, TapeParams& p) {
      RngState frng(seed + 10);
      SegmentationOutput out = model.forward(p, t, block, frng, true);
      return model.multi_loss(out, block.labels);
    });
  }
  return reports;
}

bool mutation_fixture_detected() {
  // Plain-loop evaluation of WM = softmax(Pi * (QK^T/sqrt(D) + B)).
  RngState rng(7);
  const int h = 2, n = 3, d = 2;
  Mat q = random_mat(rng, h, d), k = random_mat(rng, n, d);
  Mat pi = random_mat(rng, n, 1, 0.1, 0.9), b = random_mat(rng, h, n);
  Mat expected(h, n);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += q(i, c) * k(j, c);
      expected(i, j) = pi(j, 0) * (dot / std::sqrt((double)d) + b(i, j));
    }
    double m = expected.row(i).maxCoeff();
    Eigen::ArrayXd e = (expected.row(i).array() - m).exp();
    expected.row(i) = (e / e.sum()).matrix();
  }
  // Mutant with the bias sign flipped.
  Tape tape;
  Var scaled = scale(matmul(constant(tape, q), transpose(constant(tape, k))),
                     1.0 / std::sqrt((double)d));
  Var pre = sub(scaled, constant(tape, b));
  Var logits = hadamard(repeat_row(transpose(constant(tape, pi)), h), pre);
  Mat mutant = row_softmax(logits).val();
  return (mutant - expected).cwiseAbs().maxCoeff() > 1e-6;
}

}  // namespace dta
