#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dta/rng.hpp"
#include "dta/tape.hpp"

namespace dta {

// One fixed-size training/eval sample: N points x C channels (first three
// are XYZ) plus per-point integer labels.
struct PointCloudBlock {
  Mat points;               // NxC
  std::vector<int> labels;  // length N, in [0, num_classes)
  std::string id;

  int count() const { return static_cast<int>(points.rows()); }
  int channels() const { return static_cast<int>(points.cols()); }
};

struct DatasetSpec {
  int points_per_block = 4096;
  std::vector<std::string> channel_names = {"x", "y", "z", "mir", "nir", "green"};
  std::vector<std::string> class_names = {"road",  "building", "grass",
                                          "tree",  "soil",     "powerline"};
  double grid_cell = 0.0;  // meters; 0 = no grid subsampling
  double block_edge = 20.0;

  int channels() const { return static_cast<int>(channel_names.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text block format: line `N C K`, then N lines of C reals + 1 label;
// `#` starts a comment line. Filenames end in `.blk`.
PointCloudBlock load_block(const std::filesystem::path& file,
                           const DatasetSpec& spec);
void save_block(const std::filesystem::path& file,
                const PointCloudBlock& block, int num_classes);

// Binary cache: magic "DTAB", u32 N/C/K, N*C f32, N i32 labels,
// little-endian.
PointCloudBlock load_block_bin(const std::filesystem::path& file,
                               const DatasetSpec& spec);
void save_block_bin(const std::filesystem::path& file,
                    const PointCloudBlock& block, int num_classes);

// All `.blk` files in a directory, lexicographic order.
std::vector<PointCloudBlock> load_blocks(const std::filesystem::path& dir,
                                         const DatasetSpec& spec);

// XYZ centered at the centroid and scaled by the max axis extent into
// [-1,1]; radiometric channels min-max scaled to [0,1] per block.
// Zero-extent blocks get zero coordinates.
PointCloudBlock normalize_block(PointCloudBlock block);

// Tile the XY bounding box into block_edge cells, resample each occupied
// cell to exactly points_per_block (with replacement if short), drop cells
// under 5% occupancy relative to the block size.
std::vector<PointCloudBlock> partition_area(const Mat& points,
                                            const std::vector<int>& labels,
                                            const DatasetSpec& spec,
                                            RngState& rng);

// One representative per occupied voxel: the point nearest the voxel
// centroid.
Mat grid_subsample(const Mat& points, double cell,
                   std::vector<int>* kept_indices = nullptr);

// Greedy farthest-point sampling from seed index 0; ties broken by lower
// index.
std::vector<int> fps(const Mat& xyz, int k);

// Deterministic synthetic labeled corpus: planes, boxes, ellipsoid
// scatters, and line strips with class-specific intensity distributions.
std::vector<PointCloudBlock> synth_generate(int num_blocks,
                                            int points_per_block,
                                            int num_classes,
                                            std::uint64_t seed);

}  // namespace dta
