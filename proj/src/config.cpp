#include "dta/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace dta {

static std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

static int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("bad integer for key " + key + ": " + v);
  }
}

static double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("bad number for key " + key + ": " + v);
  }
}

static bool to_onoff(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("bad flag for key " + key + ": " + v);
}

static void apply_key(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
  ModelConfig& m = cfg.model;
  TrainConfig& t = cfg.train;
  DataConfig& d = cfg.data;
  if (key == "model.in_channels") m.in_channels = to_int(key, value);
  else if (key == "model.num_classes") m.num_classes = to_int(key, value);
  else if (key == "model.num_stages") {
    int n = to_int(key, value);
    if (n < 1) throw ConfigError("model.num_stages must be >= 1");
    StageConfig last = m.stages.empty() ? StageConfig{} : m.stages.back();
    m.stages.resize(n, last);
  } else if (key.rfind("model.stage", 0) == 0) {
    auto dot = key.find('.', 11);
    if (dot == std::string::npos) throw ConfigError("unknown config key: " + key);
    int idx = to_int(key, key.substr(11, dot - 11)) - 1;
    if (idx < 0 || idx >= static_cast<int>(m.stages.size()))
      throw ConfigError("stage index out of range in key: " + key);
    std::string field = key.substr(dot + 1);
    if (field == "width") m.stages[idx].width = to_int(key, value);
    else if (field == "ratio") m.stages[idx].ratio = to_double(key, value);
    else if (field == "temperature") m.stages[idx].temperature = to_double(key, value);
    else throw ConfigError("unknown config key: " + key);
  } else if (key == "model.arch") {
    if (value == "wnet") m.arch = Arch::Wnet;
    else if (value == "unet") m.arch = Arch::Unet;
    else throw ConfigError("bad value for model.arch: " + value);
  } else if (key == "model.lts") {
    if (value == "learned") m.lts = LtsMode::Learned;
    else if (value == "fps") m.lts = LtsMode::Fps;
    else if (value == "random") m.lts = LtsMode::Random;
    else throw ConfigError("bad value for model.lts: " + value);
  } else if (key == "model.dta") {
    if (value == "wca") m.dta = DtaMode::Wca;
    else if (value == "none") m.dta = DtaMode::None;
    else if (value == "knn_mlp") m.dta = DtaMode::KnnMlp;
    else if (value == "vca") m.dta = DtaMode::Vca;
    else throw ConfigError("bad value for model.dta: " + value);
  } else if (key == "model.gfe") m.gfe_enabled = to_onoff(key, value);
  else if (key == "model.gfe.pointwise") m.gfe_pointwise = to_onoff(key, value);
  else if (key == "model.gfe.channelwise") m.gfe_channelwise = to_onoff(key, value);
  else if (key == "model.itr") {
    if (value == "wca_map") m.itr = ItrMode::WcaMap;
    else if (value == "trilinear") m.itr = ItrMode::Trilinear;
    else if (value == "nearest") m.itr = ItrMode::Nearest;
    else throw ConfigError("bad value for model.itr: " + value);
  } else if (key == "model.knn_k") m.knn_k = to_int(key, value);
  else if (key == "train.epochs") t.epochs = to_int(key, value);
  else if (key == "train.batch_size") t.batch_size = to_int(key, value);
  else if (key == "train.lr") t.lr = to_double(key, value);
  else if (key == "train.momentum") t.momentum = to_double(key, value);
  else if (key == "train.weight_decay") t.weight_decay = to_double(key, value);
  else if (key == "train.checkpoint_every") t.checkpoint_every = to_int(key, value);
  else if (key == "data.root") d.root = value;
  else if (key == "data.train_dir") d.train_dir = value;
  else if (key == "data.eval_dir") d.eval_dir = value;
  else if (key == "data.points_per_block") d.points_per_block = to_int(key, value);
  else throw ConfigError("unknown config key: " + key);
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  // Two passes so model.num_stages may appear after stage keys.
  std::vector<std::pair<std::string, std::string>> kv;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    kv.emplace_back(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  std::stable_sort(kv.begin(), kv.end(), [](const auto& a, const auto& b) {
    return (a.first == "model.num_stages") > (b.first == "model.num_stages");
  });
  for (const auto& [k, v] : kv) apply_key(cfg, k, v);
  if (const char* root = std::getenv("DTA_DATA_ROOT"))
    cfg.data.root = root;
  cfg.model.validate();
  cfg.echo = render_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  const ModelConfig& m = cfg.model;
  out << "model.in_channels = " << m.in_channels << "\n";
  out << "model.num_classes = " << m.num_classes << "\n";
  out << "model.num_stages = " << m.stages.size() << "\n";
  for (std::size_t i = 0; i < m.stages.size(); ++i) {
    std::string px = "model.stage" + std::to_string(i + 1) + ".";
    out << px << "width = " << m.stages[i].width << "\n";
    out << px << "ratio = " << m.stages[i].ratio << "\n";
    out << px << "temperature = " << m.stages[i].temperature << "\n";
  }
  out << "model.arch = " << (m.arch == Arch::Wnet ? "wnet" : "unet") << "\n";
  out << "model.lts = "
      << (m.lts == LtsMode::Learned ? "learned"
                                    : m.lts == LtsMode::Fps ? "fps" : "random")
      << "\n";
  out << "model.dta = "
      << (m.dta == DtaMode::Wca
              ? "wca"
              : m.dta == DtaMode::None
                    ? "none"
                    : m.dta == DtaMode::KnnMlp ? "knn_mlp" : "vca")
      << "\n";
  out << "model.gfe = " << (m.gfe_enabled ? "on" : "off") << "\n";
  out << "model.gfe.pointwise = " << (m.gfe_pointwise ? "on" : "off") << "\n";
  out << "model.gfe.channelwise = " << (m.gfe_channelwise ? "on" : "off") << "\n";
  out << "model.itr = "
      << (m.itr == ItrMode::WcaMap
              ? "wca_map"
              : m.itr == ItrMode::Trilinear ? "trilinear" : "nearest")
      << "\n";
  out << "model.knn_k = " << m.knn_k << "\n";
  out << "train.epochs = " << cfg.train.epochs << "\n";
  out << "train.batch_size = " << cfg.train.batch_size << "\n";
  out << "train.lr = " << cfg.train.lr << "\n";
  out << "train.momentum = " << cfg.train.momentum << "\n";
  out << "train.weight_decay = " << cfg.train.weight_decay << "\n";
  out << "train.checkpoint_every = " << cfg.train.checkpoint_every << "\n";
  out << "data.root = " << cfg.data.root << "\n";
  out << "data.train_dir = " << cfg.data.train_dir << "\n";
  out << "data.eval_dir = " << cfg.data.eval_dir << "\n";
  out << "data.points_per_block = " << cfg.data.points_per_block << "\n";
  return out.str();
}

DatasetSpec RunConfig::dataset_spec() const {
  DatasetSpec spec;
  spec.points_per_block = data.points_per_block;
  spec.channel_names.resize(model.in_channels);
  const char* xyz[3] = {"x", "y", "z"};
  for (int i = 0; i < model.in_channels; ++i)
    spec.channel_names[i] = i < 3 ? xyz[i] : "c" + std::to_string(i);
  spec.class_names.resize(model.num_classes);
  for (int i = 0; i < model.num_classes; ++i)
    spec.class_names[i] = "class" + std::to_string(i);
  return spec;
}

}  // namespace dta
