// Python bindings for the value-level core operations. Each wrapper builds
// a throwaway tape internally and returns plain matrices; training stays on
// the C++ side (CLI).
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dta/ablations.hpp"
#include "dta/data.hpp"
#include "dta/itr.hpp"
#include "dta/metrics.hpp"
#include "dta/wnet.hpp"

namespace py = pybind11;
using namespace dta;

namespace {

Mat py_softmax(const Mat& x, const std::string& axis) {
  if (axis != "row" && axis != "col")
    throw InvalidInput("softmax: axis must be 'row' or 'col'");
  return stable_softmax(x, axis == "row" ? Axis::Row : Axis::Col);
}

Mat py_wca_map(const Mat& q, const Mat& k, const Mat& pi, const Mat& bias) {
  Tape t;
  return wca_map(constant(t, q), constant(t, k), constant(t, pi),
                 constant(t, bias), static_cast<int>(q.cols()))
      .wm.val();
}

Mat py_vca_map(const Mat& q, const Mat& k, const Mat& bias) {
  Tape t;
  return vca_map(constant(t, q), constant(t, k), constant(t, bias),
                 static_cast<int>(q.cols()))
      .wm.val();
}

Mat py_aggregate(const Mat& wm, const Mat& v) {
  Tape t;
  WCAMap map{constant(t, wm), constant(t, wm)};
  return aggregate(map, constant(t, v)).val();
}

Mat py_reconstruct(const Mat& s, const Mat& t_full, const Mat& wm) {
  Tape t;
  WCAMap map{constant(t, wm), constant(t, wm)};
  return reconstruct(constant(t, s), constant(t, t_full), map).val();
}

Mat py_interpolate(const Mat& s, const Mat& s_coords, const Mat& t_coords,
                   const std::string& mode) {
  if (mode != "trilinear" && mode != "nearest")
    throw InvalidInput("interpolate: mode must be 'trilinear' or 'nearest'");
  Tape t;
  return interpolate_up(constant(t, s), s_coords, t_coords,
                        mode == "trilinear" ? InterpMode::Trilinear
                                            : InterpMode::Nearest)
      .val();
}

std::pair<Mat, std::vector<int>> py_grid_subsample(const Mat& points,
                                                   double cell) {
  std::vector<int> kept;
  Mat out = grid_subsample(points, cell, &kept);
  return {out, kept};
}

std::pair<Mat, std::vector<int>> py_normalize(const Mat& points,
                                              const std::vector<int>& labels) {
  PointCloudBlock b{points, labels, "py"};
  b = normalize_block(std::move(b));
  return {b.points, b.labels};
}

std::vector<std::pair<Mat, std::vector<int>>> py_synth(int blocks, int points,
                                                       int classes,
                                                       std::uint64_t seed) {
  std::vector<std::pair<Mat, std::vector<int>>> out;
  for (auto& b : synth_generate(blocks, points, classes, seed))
    out.emplace_back(std::move(b.points), std::move(b.labels));
  return out;
}

py::dict py_metrics(const std::vector<int>& predictions,
                    const std::vector<int>& labels, int num_classes) {
  ConfusionMatrix cm(num_classes);
  cm.update(predictions, labels);
  py::dict d;
  d["oa"] = overall_accuracy(cm);
  d["miou"] = miou(cm);
  d["avg_f1"] = average_f1(cm);
  py::list per_class;
  for (const ClassPrf& c : per_class_prf(cm)) {
    py::dict e;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["flagged"] = c.flagged;
    per_class.append(e);
  }
  d["per_class"] = per_class;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dtaformer, m) {
  m.doc() = "Core point-cloud segmentation operations";
  m.def("softmax", &py_softmax, py::arg("x"), py::arg("axis") = "row",
        "Shift-invariant softmax along rows or columns.");
  m.def("fps", &fps, py::arg("xyz"), py::arg("k"),
        "Greedy farthest-point sampling indices, seeded at index 0.");
  m.def("grid_subsample", &py_grid_subsample, py::arg("points"),
        py::arg("cell"),
        "Voxel-grid subsampling; returns (points, kept_indices).");
  m.def("normalize", &py_normalize, py::arg("points"), py::arg("labels"),
        "Center/scale XYZ into [-1,1], min-max the remaining channels.");
  m.def("synth", &py_synth, py::arg("blocks"), py::arg("points"),
        py::arg("classes"), py::arg("seed"),
        "Deterministic synthetic labeled blocks as (points, labels) pairs.");
  m.def("wca_map", &py_wca_map, py::arg("q"), py::arg("k"), py::arg("pi"),
        py::arg("bias"),
        "Row-stochastic weighted cross-attention map.");
  m.def("vca_map", &py_vca_map, py::arg("q"), py::arg("k"), py::arg("bias"),
        "Vanilla cross-attention map (all-ones weighting).");
  m.def("aggregate", &py_aggregate, py::arg("wm"), py::arg("v"),
        "Map-weighted aggregation wm @ v.");
  m.def("reconstruct", &py_reconstruct, py::arg("s"), py::arg("t"),
        py::arg("wm"),
        "Token reconstruction softmax(wm^T) @ s + t.");
  m.def("interpolate", &py_interpolate, py::arg("s"), py::arg("s_coords"),
        py::arg("t_coords"), py::arg("mode") = "trilinear",
        "Inverse-distance (or nearest) upsampling between coordinate sets.");
  m.def("metrics", &py_metrics, py::arg("predictions"), py::arg("labels"),
        py::arg("num_classes"),
        "Confusion-matrix metrics: oa, miou, avg_f1, per_class.");
  m.def("f1_from_pr", &f1_from_pr, py::arg("precision"), py::arg("recall"),
        "F1 from precision/recall percentages.");
}
