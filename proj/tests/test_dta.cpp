#include "doctest.h"
#include "dta/ablations.hpp"
#include "dta/dta_block.hpp"
#include "dta/gradcheck.hpp"
#include "oracles.hpp"

using namespace dta;

namespace {

Mat random_mat(RngState& rng, int rows, int cols, double lo = -1.0,
               double hi = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("project_qkv identity and zero weights") {
  RngState rng(1);
  ParamStore ps;
  DtaBlock dta("dta", 3);
  dta.init(ps, rng);
  Mat s = random_mat(rng, 2, 3), tk = random_mat(rng, 4, 3);
  SUBCASE("identity weights reproduce the inputs") {
    ps.value("dta.wq") = Mat::Identity(3, 3);
    ps.value("dta.wk") = Mat::Identity(3, 3);
    ps.value("dta.wv") = Mat::Identity(3, 3);
    Tape t;
    TapeParams p(t, ps);
    auto qkv = dta.project_qkv(p, constant(t, s), constant(t, tk));
    CHECK(qkv.q.val() == s);
    CHECK(qkv.k.val() == tk);
    CHECK(qkv.v.val() == tk);
  }
  SUBCASE("zero value weights give V = 0") {
    ps.value("dta.wv").setZero();
    Tape t;
    TapeParams p(t, ps);
    auto qkv = dta.project_qkv(p, constant(t, s), constant(t, tk));
    CHECK(qkv.v.val().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("width mismatch rejected") {
    Tape t;
    TapeParams p(t, ps);
    CHECK_THROWS_AS(
        dta.project_qkv(p, constant(t, Mat::Zero(2, 4)), constant(t, tk)),
        ShapeError);
  }
  SUBCASE("fixed 2x2 products match a hand matmul") {
    Mat s2(1, 3), w(3, 3);
    s2 << 1.0, 2.0, -1.0;
    w << 0.5, 0.0, 1.0, -1.0, 0.25, 0.0, 2.0, 1.0, 1.0;
    ps.value("dta.wq") = w;
    Tape t;
    TapeParams p(t, ps);
    auto qkv = dta.project_qkv(p, constant(t, s2), constant(t, tk));
    CHECK((qkv.q.val() - s2 * w).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("wca_map single entry and VCA reduction") {
  Tape t;
  SUBCASE("H=1, N=1 gives [[1]]") {
    WCAMap wm = wca_map(constant(t, Mat::Constant(1, 1, 0.7)),
                        constant(t, Mat::Constant(1, 1, -0.2)),
                        constant(t, Mat::Constant(1, 1, 0.5)),
                        constant(t, Mat::Zero(1, 1)), 1);
    CHECK(wm.wm.val()(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("Pi = 1, B = 0 reduces to vanilla cross-attention") {
    RngState rng(2);
    Mat q = random_mat(rng, 3, 4), k = random_mat(rng, 5, 4);
    WCAMap wm =
        wca_map(constant(t, q), constant(t, k), constant(t, Mat::Ones(5, 1)),
                constant(t, Mat::Zero(3, 5)), 4);
    Mat vanilla = oracle::row_softmax(q * k.transpose() / 2.0);
    CHECK((wm.wm.val() - vanilla).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("wca_map matches the brute-force oracle, H=2 N=3") {
  RngState rng(3);
  Mat q = random_mat(rng, 2, 2), k = random_mat(rng, 3, 2);
  Mat pi = random_mat(rng, 3, 1, 0.05, 0.95), b = random_mat(rng, 2, 3);
  Tape t;
  WCAMap wm = wca_map(constant(t, q), constant(t, k), constant(t, pi),
                      constant(t, b), 2);
  Mat expected = oracle::wca_map(q, k, pi.col(0), b, 2);
  CHECK((wm.wm.val() - expected).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(wm.wm.val().row(i).sum() - 1.0) < 1e-6);
}

TEST_CASE("monotone weighting: raising one keep score touches one column") {
  RngState rng(4);
  Mat q = random_mat(rng, 2, 2), k = random_mat(rng, 4, 2);
  Mat pi = random_mat(rng, 4, 1, 0.2, 0.8), b = random_mat(rng, 2, 4);
  auto logits_for = [&](const Mat& pi_in) {
    Tape t;
    return wca_map(constant(t, q), constant(t, k), constant(t, pi_in),
                   constant(t, b), 2)
        .logits.val();
  };
  Mat base = logits_for(pi);
  Mat bumped_pi = pi;
  bumped_pi(2, 0) += 0.1;
  Mat bumped = logits_for(bumped_pi);
  for (int j = 0; j < 4; ++j) {
    double delta = (bumped.col(j) - base.col(j)).cwiseAbs().maxCoeff();
    if (j == 2)
      CHECK(delta > 0.0);
    else
      CHECK(delta == 0.0);
  }
}

TEST_CASE("aggregate shapes and convexity") {
  RngState rng(5);
  Mat v = random_mat(rng, 4, 3);
  Tape t;
  Var vv = constant(t, v);
  SUBCASE("uniform map averages V") {
    WCAMap wm{constant(t, Mat::Constant(2, 4, 0.25)), Var{}};
    Var out = aggregate(wm, vv);
    Mat mean = v.colwise().mean();
    for (int i = 0; i < 2; ++i)
      CHECK((out.val().row(i) - mean).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("one-hot rows select rows of V") {
    Mat hot = Mat::Zero(2, 4);
    hot(0, 3) = 1.0;
    hot(1, 1) = 1.0;
    WCAMap wm{constant(t, hot), Var{}};
    Var out = aggregate(wm, vv);
    CHECK(out.val().row(0) == v.row(3));
    CHECK(out.val().row(1) == v.row(1));
  }
  SUBCASE("rows stay inside the min/max envelope of V") {
    Mat soft = oracle::row_softmax(random_mat(rng, 3, 4));
    WCAMap wm{constant(t, soft), Var{}};
    Var out = aggregate(wm, vv);
    for (int c = 0; c < 3; ++c) {
      CHECK(out.val().col(c).maxCoeff() <= v.col(c).maxCoeff() + 1e-12);
      CHECK(out.val().col(c).minCoeff() >= v.col(c).minCoeff() - 1e-12);
    }
  }
  SUBCASE("shape mismatch rejected") {
    WCAMap wm{constant(t, Mat::Constant(2, 3, 1.0 / 3.0)), Var{}};
    CHECK_THROWS_AS(aggregate(wm, vv), ShapeError);
  }
  SUBCASE("2x3 numeric product matches a hand matmul") {
    Mat w(2, 4);
    w << 0.1, 0.2, 0.3, 0.4, 0.25, 0.25, 0.25, 0.25;
    WCAMap wm{constant(t, w), Var{}};
    CHECK((aggregate(wm, vv).val() - oracle::aggregate(w, v))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("vca_map equals wca_map with all-ones Pi") {
  RngState rng(6);
  Mat q = random_mat(rng, 2, 3), k = random_mat(rng, 4, 3);
  Mat b = random_mat(rng, 2, 4);
  Tape t;
  WCAMap v = vca_map(constant(t, q), constant(t, k), constant(t, b), 3);
  WCAMap w = wca_map(constant(t, q), constant(t, k),
                     constant(t, Mat::Ones(4, 1)), constant(t, b), 3);
  CHECK((v.wm.val() - w.wm.val()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dta gradient check") {
  for (const auto& r : run_gradcheck_suite(42)) {
    if (r.name == "dta.aggregate") {
      INFO("max_rel_err=", r.max_rel_err);
      CHECK(r.pass);
    }
  }
}
