// Acceptance gate: one pass/fail line per criterion, non-zero exit if any
// fails. Heavier than the unit suites (includes training runs and CLI
// round-trips).
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dta/data.hpp"
#include "dta/gfe.hpp"
#include "dta/gradcheck.hpp"
#include "dta/itr.hpp"
#include "dta/metrics.hpp"
#include "dta/wnet.hpp"
#include "oracles.hpp"

using namespace dta;

namespace {

int failures = 0;

void criterion(const std::string& name, const std::function<void()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  std::string error;
  try {
    body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  if (error.empty()) {
    std::printf("PASS  %-24s (%.1fs)\n", name.c_str(), secs);
  } else {
    ++failures;
    std::printf("FAIL  %-24s (%.1fs): %s\n", name.c_str(), secs,
                error.c_str());
  }
  std::fflush(stdout);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

Mat random_mat(int r, int c, RngState& rng) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

// Minimal training loop shared by the overfit and ablation criteria:
// shuffled batches, cosine schedule, returns per-epoch batch-mean losses.
std::vector<double> fit(const Model& model, ParamStore& ps,
                        const std::vector<PointCloudBlock>& blocks,
                        int epochs, int batch_size, double lr0,
                        RngState& rng) {
  SgdMomentum opt(0.9, 1e-4);
  std::vector<double> losses;
  std::vector<int> order(blocks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = (int)i;
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    double lr = cosine_lr(lr0, e, epochs);
    double sum = 0.0;
    int batches = 0;
    for (std::size_t s = 0; s < order.size(); s += batch_size) {
      std::vector<const PointCloudBlock*> batch;
      for (std::size_t i = s; i < std::min(order.size(), s + batch_size); ++i)
        batch.push_back(&blocks[order[i]]);
      sum += train_step(model, ps, opt, batch, lr, rng);
      ++batches;
    }
    losses.push_back(sum / batches);
  }
  return losses;
}

std::vector<PointCloudBlock> normalized_corpus(int n, int points,
                                               std::uint64_t seed) {
  std::vector<PointCloudBlock> out;
  for (auto& b : synth_generate(n, points, 6, seed))
    out.push_back(normalize_block(std::move(b)));
  return out;
}

ModelConfig small_config(int width) {
  ModelConfig cfg;
  cfg.in_channels = 6;
  cfg.num_classes = 6;
  cfg.stages = {{width, 0.25, 1.0}, {width, 0.25, 1.0}};
  return cfg;
}

// ---- criteria ---------------------------------------------------------

void c1_table_arithmetic() {
  const double rows[6][3] = {{93.1, 82.5, 87.5}, {89.1, 95.9, 92.4},
                             {99.0, 98.8, 98.9}, {94.1, 97.7, 95.9},
                             {77.4, 55.9, 64.9}, {94.3, 86.3, 90.1}};
  for (const auto& r : rows) {
    double f1 = f1_from_pr(r[0], r[1]);
    require(std::abs(f1 - r[2]) <= 0.05,
            "f1(" + std::to_string(r[0]) + "," + std::to_string(r[1]) +
                ") = " + std::to_string(f1));
  }
}

void c2_equation_oracles() {
  RngState rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    int h = 1 + (int)rng.below(3), n = h + (int)rng.below(4 - h) + 1,
        d = 2 + (int)rng.below(2);
    if (n > 4) n = 4;
    Mat qm = random_mat(h, d, rng), km = random_mat(n, d, rng),
        vm = random_mat(n, d, rng), bm = random_mat(h, n, rng),
        tm = random_mat(n, d, rng);
    Eigen::VectorXd piv(n);
    for (int i = 0; i < n; ++i) piv(i) = rng.uniform(0.0, 1.0);

    Tape tape;
    Var q = constant(tape, qm), k = constant(tape, km), v = constant(tape, vm),
        b = constant(tape, bm), t = constant(tape, tm);
    Var pi = constant(tape, piv);
    WCAMap wm = wca_map(q, k, pi, b, d);
    require(max_abs_diff(wm.wm.val(), oracle::wca_map(qm, km, piv, bm, d)) <
                1e-6,
            "wca_map mismatch");
    require(max_abs_diff(aggregate(wm, v).val(),
                         oracle::aggregate(wm.wm.val(), vm)) < 1e-6,
            "aggregate mismatch");
    Var s = aggregate(wm, v);
    require(max_abs_diff(reconstruct(s, t, wm).val(),
                         oracle::reconstruct(s.val(), tm, wm.wm.val())) < 1e-6,
            "reconstruct mismatch");
  }
  // Dual attention branches against brute force, H=3, D=2.
  RngState rng2(11);
  ParamStore ps;
  GfeBlock gfe("g", 2);
  gfe.init(ps, rng2);
  Mat sm = random_mat(3, 2, rng2), coords = random_mat(3, 3, rng2);
  Tape tape;
  TapeParams p(tape, ps);
  Var s = constant(tape, sm);
  Mat bias = gfe.pos_bias.forward(p, tape, coords, coords).val();
  require(max_abs_diff(gfe.pointwise_attention(p, s, coords).val(),
                       oracle::pointwise_attention(sm, ps.value("g.wq"),
                                                   ps.value("g.wk"),
                                                   ps.value("g.wv"), bias, 2)) <
              1e-6,
          "pointwise attention mismatch");
  require(max_abs_diff(gfe.channelwise_attention(p, s).val(),
                       oracle::channelwise_attention(sm, ps.value("g.wq"),
                                                     ps.value("g.wk"),
                                                     ps.value("g.wv"), 2)) <
              1e-6,
          "channelwise attention mismatch");
}

void c3_vca_reduction() {
  RngState rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    int h = 2, n = 6, d = 4;
    Mat qm = random_mat(h, d, rng), km = random_mat(n, d, rng),
        vm = random_mat(n, d, rng);
    Tape tape;
    Var q = constant(tape, qm), k = constant(tape, km), v = constant(tape, vm);
    Var ones = constant(tape, Mat::Ones(n, 1));
    Var zero = constant(tape, Mat::Zero(h, n));
    WCAMap weighted = wca_map(q, k, ones, zero, d);
    WCAMap vanilla = vca_map(q, k, zero, d);
    Mat ref = oracle::row_softmax(qm * km.transpose() / std::sqrt((double)d));
    require(max_abs_diff(weighted.wm.val(), ref) < 1e-6,
            "wca(pi=1,b=0) != reference");
    require(max_abs_diff(vanilla.wm.val(), ref) < 1e-6, "vca != reference");
    require(max_abs_diff(aggregate(weighted, v).val(),
                         aggregate(vanilla, v).val()) < 1e-6,
            "aggregated outputs differ");
  }
}

void c4_gradient_suite() {
  for (const auto& r : run_gradcheck_suite(42))
    require(r.pass, r.name + " max_rel_err " + std::to_string(r.max_rel_err));
  require(mutation_fixture_detected(), "mutation fixture not detected");
}

void c5_structural_invariants() {
  // Reconstruction weights are row-stochastic: ones in, ones out.
  RngState rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    int h = 2 + (int)rng.below(3), n = h + 2 + (int)rng.below(5), d = 3;
    Tape tape;
    Var q = constant(tape, random_mat(h, d, rng));
    Var k = constant(tape, random_mat(n, d, rng));
    Var pi = constant(tape, random_mat(n, 1, rng).cwiseAbs());
    Var b = constant(tape, random_mat(h, n, rng));
    WCAMap wm = wca_map(q, k, pi, b, d);
    Mat row_sums = wm.wm.val().rowwise().sum();
    require((row_sums.array() - 1.0).abs().maxCoeff() < 1e-6,
            "wca rows not stochastic");
    Var ones = constant(tape, Mat::Ones(h, d));
    Var zero = constant(tape, Mat::Zero(n, d));
    require((reconstruct(ones, zero, wm).val().array() - 1.0).abs().maxCoeff() <
                1e-6,
            "itr weights not stochastic");
  }

  // Random model configs: output count, map identity, wca row sums.
  for (int width : {8, 16}) {
    ModelConfig cfg = small_config(width);
    cfg.stages[0].ratio = 0.3;
    Model model(cfg);
    ParamStore ps;
    RngState init_rng(23 + width);
    model.init(ps, init_rng);
    PointCloudBlock block =
        normalize_block(synth_generate(1, 24, 6, 31 + width)[0]);
    Tape tape;
    TapeParams p(tape, ps);
    RngState rng2(5);
    SegmentationOutput out = model.forward(p, tape, block, rng2, false);
    for (const auto& d : out.stages) {
      require(d.map_produced_id >= 0 && d.map_produced_id == d.map_consumed_id,
              "wca map not produced/consumed as one node");
      Mat sums = d.wca.rowwise().sum();
      require((sums.array() - 1.0).abs().maxCoeff() < 1e-6,
              "stage wca rows not stochastic");
    }
    for (const Var& l : out.logits)
      require((int)l.rows() == block.count(), "stage output count != N");

    // Eval-mode permutation equivariance (keep scores must be distinct).
    const Mat& prob = out.stages[0].keep_prob;
    for (int i = 0; i < prob.rows(); ++i)
      for (int j = i + 1; j < prob.rows(); ++j)
        require(prob(i, 0) != prob(j, 0), "tied keep scores; pick a new seed");
    std::vector<int> perm(block.count());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (int)i;
    RngState perm_rng(3);
    for (std::size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[perm_rng.below(i)]);
    PointCloudBlock shuffled = block;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.points.row((Eigen::Index)i) = block.points.row(perm[i]);
      shuffled.labels[i] = block.labels[perm[i]];
    }
    Tape tape2;
    TapeParams p2(tape2, ps);
    SegmentationOutput out2 = model.forward(p2, tape2, shuffled, rng2, false);
    Mat expect(block.count(), cfg.num_classes);
    for (std::size_t i = 0; i < perm.size(); ++i)
      expect.row((Eigen::Index)i) = out.logits.back().val().row(perm[i]);
    require(max_abs_diff(out2.logits.back().val(), expect) < 1e-6,
            "eval forward not permutation-equivariant");
  }
}

void c6_overfit() {
  std::vector<PointCloudBlock> blocks = normalized_corpus(32, 512, 2024);
  Model model(small_config(32));
  ParamStore ps;
  RngState rng(7);
  model.init(ps, rng);
  std::vector<double> losses = fit(model, ps, blocks, 60, 8, 0.1, rng);
  for (std::size_t e = 1; e < losses.size(); ++e)
    require(losses[e] <= 1.10 * losses[e - 1],
            "loss rose >10% at epoch " + std::to_string(e));
  double oa = overall_accuracy(evaluate(model, ps, blocks));
  require(oa >= 99.0, "point accuracy " + std::to_string(oa) + "% < 99%");
}

void c7_ablation_ordering() {
  std::vector<PointCloudBlock> train = normalized_corpus(32, 512, 3000);
  std::vector<PointCloudBlock> held = normalized_corpus(8, 512, 3001);
  auto run = [&](ModelConfig cfg) {
    Model model(cfg);
    ParamStore ps;
    RngState rng(11);
    model.init(ps, rng);
    fit(model, ps, train, 30, 8, 0.1, rng);
    return average_f1(evaluate(model, ps, held));
  };
  double baseline = run(small_config(32));
  ModelConfig no_dta = small_config(32);
  no_dta.dta = DtaMode::None;
  ModelConfig random_lts = small_config(32);
  random_lts.lts = LtsMode::Random;
  double f_no_dta = run(no_dta);
  double f_random = run(random_lts);
  std::printf("      avg-F1: baseline %.2f, dta=none %.2f, lts=random %.2f\n",
              baseline, f_no_dta, f_random);
  require(baseline >= f_no_dta, "baseline < dta=none");
  require(baseline >= f_random, "baseline < lts=random");
}

void c8_fps_oracle() {
  RngState rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    Mat xyz = random_mat(64, 3, rng);
    int k = 1 + (int)rng.below(64);
    require(fps(xyz, k) == oracle::fps(xyz, k), "fps != greedy reference");
  }
}

std::string slurp(const std::filesystem::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reports differ only in wall-clock latency, which is measured but not an
// acceptance target; compare everything else.
std::string without_latency(const std::string& json) {
  std::string out;
  std::istringstream in(json);
  std::string line;
  while (std::getline(in, line))
    if (line.find("\"latency_ms\"") == std::string::npos) out += line + "\n";
  return out;
}

void c9_cli_determinism() {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "dta_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "t.cfg")
      << "model.in_channels = 6\nmodel.num_classes = 6\n"
      << "model.num_stages = 2\nmodel.stage1.width = 16\n"
      << "model.stage1.ratio = 0.25\nmodel.stage2.width = 16\n"
      << "model.stage2.ratio = 0.25\ntrain.epochs = 2\n"
      << "train.batch_size = 4\ntrain.lr = 0.05\n"
      << "data.root = " << (dir / "data").string() << "\n";
  auto sh = [&](const std::string& cmd) {
    int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    require(rc == 0, "command failed: " + cmd);
  };
  std::string cli = DTA_CLI_PATH;
  std::string cfg = (dir / "t.cfg").string();
  sh(cli + " synth --out " + (dir / "data").string() +
     " --blocks 8 --points 64 --seed 5");
  sh(cli + " train --config " + cfg + " --out " + (dir / "a").string() +
     " --seed 123");
  sh(cli + " train --config " + cfg + " --out " + (dir / "b").string() +
     " --seed 123");
  require(slurp(dir / "a" / "checkpoint.bin") ==
              slurp(dir / "b" / "checkpoint.bin"),
          "checkpoints differ");
  sh(cli + " eval --config " + cfg + " --checkpoint " +
     (dir / "a" / "checkpoint.bin").string() + " --out " +
     (dir / "ea").string() + " --seed 123");
  sh(cli + " eval --config " + cfg + " --checkpoint " +
     (dir / "b" / "checkpoint.bin").string() + " --out " +
     (dir / "eb").string() + " --seed 123");
  std::string ra = slurp(dir / "ea" / "report.json");
  std::string rb = slurp(dir / "eb" / "report.json");
  require(!ra.empty() && without_latency(ra) == without_latency(rb),
          "eval reports differ");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  criterion("table_arithmetic", c1_table_arithmetic);
  criterion("equation_oracles", c2_equation_oracles);
  criterion("vca_reduction", c3_vca_reduction);
  criterion("gradient_suite", c4_gradient_suite);
  criterion("structural_invariants", c5_structural_invariants);
  criterion("fps_oracle", c8_fps_oracle);
  criterion("cli_determinism", c9_cli_determinism);
  criterion("overfit", c6_overfit);
  criterion("ablation_ordering", c7_ablation_ordering);
  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
