#include "dta/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace dta {

namespace fs = std::filesystem;

static DataError parse_error(const fs::path& file, int line,
                             const std::string& what) {
  return DataError(file.string() + ":" + std::to_string(line) + ": " + what);
}

PointCloudBlock load_block(const fs::path& file, const DatasetSpec& spec) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw parse_error(file, lineno, "missing header");
  int n = 0, c = 0, k = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> n >> c >> k) || n < 1 || c < 3 || k < 1)
      throw parse_error(file, lineno, "bad header, expected `N C K`");
  }
  if (c != spec.channels())
    throw parse_error(file, lineno,
                      "channel count " + std::to_string(c) +
                          " does not match spec " +
                          std::to_string(spec.channels()));
  PointCloudBlock block;
  block.points.resize(n, c);
  block.labels.resize(n);
  block.id = file.stem().string();
  for (int i = 0; i < n; ++i) {
    if (!next_line()) throw parse_error(file, lineno, "unexpected end of file");
    std::istringstream ls(line);
    for (int j = 0; j < c; ++j)
      if (!(ls >> block.points(i, j)))
        throw parse_error(file, lineno, "malformed point line");
    int label;
    if (!(ls >> label)) throw parse_error(file, lineno, "missing label");
    std::string extra;
    if (ls >> extra) throw parse_error(file, lineno, "trailing columns");
    if (label < 0 || label >= spec.num_classes())
      throw parse_error(file, lineno,
                        "label " + std::to_string(label) + " out of range");
    block.labels[i] = label;
  }
  return block;
}

void save_block(const fs::path& file, const PointCloudBlock& block,
                int num_classes) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out.precision(17);
  out << block.count() << ' ' << block.channels() << ' ' << num_classes
      << '\n';
  for (int i = 0; i < block.count(); ++i) {
    for (int j = 0; j < block.channels(); ++j) out << block.points(i, j) << ' ';
    out << block.labels[i] << '\n';
  }
}

static void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

static std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void save_block_bin(const fs::path& file, const PointCloudBlock& block,
                    int num_classes) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out.write("DTAB", 4);
  write_u32(out, static_cast<std::uint32_t>(block.count()));
  write_u32(out, static_cast<std::uint32_t>(block.channels()));
  write_u32(out, static_cast<std::uint32_t>(num_classes));
  for (int i = 0; i < block.count(); ++i)
    for (int j = 0; j < block.channels(); ++j) {
      float f = static_cast<float>(block.points(i, j));
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      write_u32(out, u);
    }
  for (int label : block.labels)
    write_u32(out, static_cast<std::uint32_t>(label));
}

PointCloudBlock load_block_bin(const fs::path& file, const DatasetSpec& spec) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "DTAB", 4) != 0)
    throw DataError(file.string() + ": bad magic");
  int n = static_cast<int>(read_u32(in));
  int c = static_cast<int>(read_u32(in));
  read_u32(in);  // class count echo
  if (c != spec.channels())
    throw DataError(file.string() + ": channel count mismatch");
  PointCloudBlock block;
  block.points.resize(n, c);
  block.labels.resize(n);
  block.id = file.stem().string();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      std::uint32_t u = read_u32(in);
      float f;
      std::memcpy(&f, &u, 4);
      block.points(i, j) = f;
    }
  for (int i = 0; i < n; ++i) {
    int label = static_cast<int>(read_u32(in));
    if (label < 0 || label >= spec.num_classes())
      throw DataError(file.string() + ": label out of range");
    block.labels[i] = label;
  }
  return block;
}

std::vector<PointCloudBlock> load_blocks(const fs::path& dir,
                                         const DatasetSpec& spec) {
  if (!fs::exists(dir)) throw DataError("no such directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".blk") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<PointCloudBlock> blocks;
  blocks.reserve(files.size());
  for (const auto& f : files) blocks.push_back(load_block(f, spec));
  return blocks;
}

PointCloudBlock normalize_block(PointCloudBlock block) {
  const int n = block.count();
  if (n < 1) throw DataError("normalize_block: empty block");
  Eigen::RowVector3d centroid = block.points.leftCols(3).colwise().mean();
  Eigen::RowVector3d lo = block.points.leftCols(3).colwise().minCoeff();
  Eigen::RowVector3d hi = block.points.leftCols(3).colwise().maxCoeff();
  double extent = (hi - lo).maxCoeff();
  if (extent > 0.0) {
    block.points.leftCols(3) =
        (block.points.leftCols(3).rowwise() - centroid) * (2.0 / extent);
  } else {
    block.points.leftCols(3).setZero();
  }
  for (int j = 3; j < block.channels(); ++j) {
    double lo_j = block.points.col(j).minCoeff();
    double hi_j = block.points.col(j).maxCoeff();
    if (hi_j > lo_j)
      block.points.col(j) =
          (block.points.col(j).array() - lo_j) / (hi_j - lo_j);
    else
      block.points.col(j).setZero();
  }
  return block;
}

std::vector<PointCloudBlock> partition_area(const Mat& points,
                                            const std::vector<int>& labels,
                                            const DatasetSpec& spec,
                                            RngState& rng) {
  std::vector<PointCloudBlock> blocks;
  const int m = static_cast<int>(points.rows());
  if (m == 0) return blocks;
  double x0 = points.col(0).minCoeff();
  double y0 = points.col(1).minCoeff();
  const double edge = spec.block_edge;
  std::map<std::pair<int, int>, std::vector<int>> cells;
  for (int i = 0; i < m; ++i) {
    int cx = static_cast<int>(std::floor((points(i, 0) - x0) / edge));
    int cy = static_cast<int>(std::floor((points(i, 1) - y0) / edge));
    cells[{cx, cy}].push_back(i);
  }
  const int target = spec.points_per_block;
  const int min_occupancy = static_cast<int>(std::ceil(0.05 * target));
  for (const auto& [key, members] : cells) {
    if (static_cast<int>(members.size()) < min_occupancy) continue;
    std::vector<int> chosen;
    chosen.reserve(target);
    if (static_cast<int>(members.size()) >= target) {
      // Partial Fisher-Yates draw without replacement.
      std::vector<int> pool = members;
      for (int i = 0; i < target; ++i) {
        std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
        chosen.push_back(pool[i]);
      }
    } else {
      for (int i = 0; i < target; ++i)
        chosen.push_back(members[rng.below(members.size())]);
    }
    PointCloudBlock block;
    block.points.resize(target, points.cols());
    block.labels.resize(target);
    for (int i = 0; i < target; ++i) {
      block.points.row(i) = points.row(chosen[i]);
      block.labels[i] = labels[chosen[i]];
    }
    block.id = "cell_" + std::to_string(key.first) + "_" +
               std::to_string(key.second);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

Mat grid_subsample(const Mat& points, double cell,
                   std::vector<int>* kept_indices) {
  if (cell <= 0.0) throw DataError("grid_subsample: cell must be positive");
  struct Best {
    int index;
    double dist;
  };
  std::map<std::tuple<long, long, long>, Best> voxels;
  std::vector<std::tuple<long, long, long>> order;
  for (int i = 0; i < points.rows(); ++i) {
    long vx = static_cast<long>(std::floor(points(i, 0) / cell));
    long vy = static_cast<long>(std::floor(points(i, 1) / cell));
    long vz = static_cast<long>(std::floor(points(i, 2) / cell));
    Eigen::RowVector3d center((vx + 0.5) * cell, (vy + 0.5) * cell,
                              (vz + 0.5) * cell);
    double d = (points.row(i).head<3>() - center).squaredNorm();
    auto key = std::make_tuple(vx, vy, vz);
    auto it = voxels.find(key);
    if (it == voxels.end()) {
      voxels.emplace(key, Best{i, d});
      order.push_back(key);
    } else if (d < it->second.dist) {
      it->second = Best{i, d};
    }
  }
  Mat out(static_cast<Eigen::Index>(order.size()), points.cols());
  if (kept_indices) kept_indices->clear();
  for (std::size_t r = 0; r < order.size(); ++r) {
    int idx = voxels.at(order[r]).index;
    out.row(static_cast<Eigen::Index>(r)) = points.row(idx);
    if (kept_indices) kept_indices->push_back(idx);
  }
  return out;
}

std::vector<int> fps(const Mat& xyz, int k) {
  const int m = static_cast<int>(xyz.rows());
  if (k < 1 || k > m) throw DataError("fps: k out of range");
  std::vector<int> chosen = {0};
  Eigen::VectorXd min_dist =
      (xyz.rowwise() - xyz.row(0)).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < k) {
    int best = 0;
    double best_d = -1.0;
    for (int i = 0; i < m; ++i)
      if (min_dist(i) > best_d) {
        best_d = min_dist(i);
        best = i;
      }
    chosen.push_back(best);
    min_dist =
        min_dist.cwiseMin((xyz.rowwise() - xyz.row(best)).rowwise().squaredNorm());
  }
  return chosen;
}

std::vector<PointCloudBlock> synth_generate(int num_blocks,
                                            int points_per_block,
                                            int num_classes,
                                            std::uint64_t seed) {
  if (num_classes < 2) throw DataError("synth_generate: need >= 2 classes");
  RngState rng(seed);
  std::vector<PointCloudBlock> blocks;
  blocks.reserve(num_blocks);
  // Distinct intensity codes per class: corners of the unit cube, shifted
  // for classes beyond 8.
  auto intensity = [&](int c, int ch) {
    double base = ((c >> ch) & 1) ? 0.85 : 0.15;
    return base + 0.05 * (c / 8);
  };
  for (int b = 0; b < num_blocks; ++b) {
    PointCloudBlock block;
    block.points.resize(points_per_block, 6);
    block.labels.resize(points_per_block);
    block.id = "synth_" + std::to_string(b);
    for (int i = 0; i < points_per_block; ++i) {
      int c = i % num_classes;  // equal shares, every class >= 2%
      double x, y, z;
      switch (c % 4) {
        case 0:  // ground plane
          x = rng.uniform(0.0, 10.0);
          y = rng.uniform(0.0, 10.0);
          z = rng.uniform(-0.05, 0.05);
          break;
        case 1: {  // box volume
          double cx = 2.0 + 6.0 * ((c / 4) % 2);
          x = cx + rng.uniform(-1.0, 1.0);
          y = 3.0 + rng.uniform(-1.0, 1.0);
          z = rng.uniform(0.0, 3.0);
          break;
        }
        case 2: {  // ellipsoid scatter
          double cx = 7.0, cy = 7.0, cz = 2.0;
          x = cx + rng.uniform(-1.0, 1.0);
          y = cy + rng.uniform(-1.0, 1.0);
          z = cz + rng.uniform(-1.5, 1.5);
          break;
        }
        default: {  // thin line strip
          double s = rng.uniform(0.0, 10.0);
          x = s;
          y = 5.0 + rng.uniform(-0.05, 0.05);
          z = 5.0 + rng.uniform(-0.05, 0.05);
          break;
        }
      }
      block.points(i, 0) = x;
      block.points(i, 1) = y;
      block.points(i, 2) = z;
      for (int ch = 0; ch < 3; ++ch)
        block.points(i, 3 + ch) =
            intensity(c, ch) + rng.uniform(-0.05, 0.05);
      block.labels[i] = c;
    }
    // Shuffle so labels are not stored in generator order.
    for (int i = points_per_block - 1; i > 0; --i) {
      int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      block.points.row(i).swap(block.points.row(j));
      std::swap(block.labels[i], block.labels[j]);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace dta
