#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "dta/wnet.hpp"

namespace dta {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 8;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int checkpoint_every = 0;  // 0 = final epoch only
};

struct DataConfig {
  std::string root = "data";
  std::string train_dir = "train";
  std::string eval_dir = "eval";
  int points_per_block = 4096;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  std::string echo;  // normalized flat key=value text

  DatasetSpec dataset_spec() const;
};

// Flat dotted-key `key = value` text, `#` comments. Unknown keys raise
// ConfigError naming the key. DTA_DATA_ROOT overrides data.root.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& file);
std::string render_config(const RunConfig& cfg);

}  // namespace dta
