// Command-line front end: training, evaluation, ablation sweeps, gradient
// checking, visualization dumps, and synthetic corpus generation.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "dta/config.hpp"
#include "dta/gradcheck.hpp"
#include "dta/wnet.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dta;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::vector<PointCloudBlock> load_split(const fs::path& dir,
                                        const DatasetSpec& spec) {
  if (!fs::is_directory(dir))
    throw ConfigError("missing data directory: " + dir.string());
  auto blocks = load_blocks(dir, spec);
  if (blocks.empty())
    throw ConfigError("no .blk files in " + dir.string());
  for (auto& b : blocks) b = normalize_block(std::move(b));
  return blocks;
}

// Comment banner so every artifact carries its provenance.
void write_banner(std::ostream& out, const RunConfig& cfg, std::uint64_t seed) {
  out << "# seed = " << seed << "\n";
  std::istringstream echo(cfg.echo);
  std::string line;
  while (std::getline(echo, line)) out << "# " << line << "\n";
}

struct EvalMetrics {
  double oa = 0.0, miou = 0.0, avg_f1 = 0.0;
  ConfusionMatrix cm{1};
};

EvalMetrics eval_metrics(const Model& model, ParamStore& ps,
                         const std::vector<PointCloudBlock>& blocks) {
  EvalMetrics m;
  m.cm = evaluate(model, ps, blocks);
  m.oa = overall_accuracy(m.cm);
  m.miou = miou(m.cm);
  m.avg_f1 = average_f1(m.cm);
  return m;
}

struct TrainArtifacts {
  ParamStore params;
  std::map<std::string, Mat> velocities;
  EvalMetrics last_eval;
};

// Full training loop; optionally streams the per-epoch CSV log.
TrainArtifacts run_training(const RunConfig& cfg,
                            const std::vector<PointCloudBlock>& train_blocks,
                            const std::vector<PointCloudBlock>& eval_blocks,
                            std::uint64_t seed, std::ostream* log,
                            const fs::path* out_dir) {
  Model model(cfg.model);
  TrainArtifacts art;
  RngState rng(seed);
  model.init(art.params, rng);
  SgdMomentum opt(cfg.train.momentum, cfg.train.weight_decay);
  const int epochs = cfg.train.epochs;
  const int bs = std::max(1, cfg.train.batch_size);
  std::vector<int> order(train_blocks.size());
  std::iota(order.begin(), order.end(), 0);
  if (log) *log << "epoch,lr,train_loss,eval_oa,eval_miou,eval_avg_f1\n";
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double lr = cosine_lr(cfg.train.lr, epoch, epochs);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::size_t j = i + rng.below(order.size() - i);
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    int counted = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<const PointCloudBlock*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i)
        batch.push_back(&train_blocks[order[i]]);
      loss_sum += train_step(model, art.params, opt, batch, lr, rng) *
                  static_cast<double>(batch.size());
      counted += static_cast<int>(batch.size());
    }
    double train_loss = loss_sum / std::max(1, counted);
    art.last_eval = eval_metrics(model, art.params, eval_blocks);
    if (log) {
      log->precision(10);
      *log << epoch << "," << lr << "," << train_loss << "," << art.last_eval.oa
           << "," << art.last_eval.miou << "," << art.last_eval.avg_f1 << "\n";
      log->flush();
    }
    const int every = cfg.train.checkpoint_every;
    if (out_dir && every > 0 && (epoch + 1) % every == 0) {
      Checkpoint ck{cfg.echo, art.params, opt.velocities(), epoch + 1, seed};
      save_checkpoint(*out_dir /
                          ("checkpoint_epoch" + std::to_string(epoch + 1) + ".bin"),
                      ck);
    }
  }
  art.velocities = opt.velocities();
  return art;
}

// Only the model section decides whether a checkpoint fits a config.
std::string model_echo(const std::string& echo) {
  std::istringstream in(echo);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("model.", 0) == 0) out += line + "\n";
  return out;
}

json report_json(const RunConfig& cfg, const EvalMetrics& m, double latency_ms,
                 std::uint64_t seed) {
  const DatasetSpec spec = cfg.dataset_spec();
  json per_class = json::object();
  auto prf = per_class_prf(m.cm);
  for (std::size_t c = 0; c < prf.size(); ++c)
    per_class[spec.class_names[c]] = {{"precision", prf[c].precision},
                                      {"recall", prf[c].recall},
                                      {"f1", prf[c].f1},
                                      {"flagged", prf[c].flagged}};
  json confusion = json::array();
  for (int i = 0; i < m.cm.num_classes(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cm.num_classes(); ++j) row.push_back(m.cm.at(i, j));
    confusion.push_back(row);
  }
  return {{"oa", m.oa},
          {"miou", m.miou},
          {"avg_f1", m.avg_f1},
          {"per_class", per_class},
          {"confusion", confusion},
          {"latency_ms", latency_ms},
          {"config_echo", cfg.echo},
          {"seed", seed}};
}

const std::vector<std::pair<std::string, std::string>> kVariants = {
    {"lts=fps", "model.lts"},          {"lts=random", "model.lts"},
    {"dta=none", "model.dta"},         {"dta=knn_mlp", "model.dta"},
    {"dta=vca", "model.dta"},          {"gfe=off", "model.gfe"},
    {"gfe=no_pointwise", "model.gfe.pointwise"},
    {"gfe=no_channelwise", "model.gfe.channelwise"},
    {"itr=trilinear", "model.itr"},    {"itr=nearest", "model.itr"},
    {"arch=unet", "model.arch"},
};

RunConfig apply_variant(RunConfig cfg, const std::string& name) {
  ModelConfig& m = cfg.model;
  if (name == "lts=fps") m.lts = LtsMode::Fps;
  else if (name == "lts=random") m.lts = LtsMode::Random;
  else if (name == "dta=none") m.dta = DtaMode::None;
  else if (name == "dta=knn_mlp") m.dta = DtaMode::KnnMlp;
  else if (name == "dta=vca") m.dta = DtaMode::Vca;
  else if (name == "gfe=off") m.gfe_enabled = false;
  else if (name == "gfe=no_pointwise") m.gfe_pointwise = false;
  else if (name == "gfe=no_channelwise") m.gfe_channelwise = false;
  else if (name == "itr=trilinear") m.itr = ItrMode::Trilinear;
  else if (name == "itr=nearest") m.itr = ItrMode::Nearest;
  else if (name == "arch=unet") m.arch = Arch::Unet;
  else {
    std::string valid;
    for (const auto& [v, key] : kVariants) valid += " " + v;
    throw ConfigError("unknown variant: " + name + "; valid names:" + valid);
  }
  cfg.echo = render_config(cfg);
  return cfg;
}

int cmd_train(const std::string& config_path, std::uint64_t seed,
              const fs::path& out) {
  RunConfig cfg = load_config(config_path);
  DatasetSpec spec = cfg.dataset_spec();
  fs::path root(cfg.data.root);
  auto train_blocks = load_split(root / cfg.data.train_dir, spec);
  auto eval_blocks = load_split(root / cfg.data.eval_dir, spec);
  fs::create_directories(out);
  std::ofstream log(out / "train_log.csv");
  write_banner(log, cfg, seed);
  TrainArtifacts art =
      run_training(cfg, train_blocks, eval_blocks, seed, &log, &out);
  Checkpoint ck{cfg.echo, art.params, art.velocities, cfg.train.epochs, seed};
  save_checkpoint(out / "checkpoint.bin", ck);
  std::cout << "trained " << cfg.train.epochs << " epochs, final oa "
            << art.last_eval.oa << "%\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ck_path,
             std::uint64_t seed, const fs::path& out) {
  RunConfig cfg = load_config(config_path);
  Checkpoint ck = load_checkpoint(ck_path);
  if (model_echo(ck.config_echo) != model_echo(cfg.echo))
    throw ConfigError("checkpoint model config does not match " + config_path);
  Model model(cfg.model);
  auto blocks =
      load_split(fs::path(cfg.data.root) / cfg.data.eval_dir, cfg.dataset_spec());
  EvalMetrics m = eval_metrics(model, ck.params, blocks);
  double latency = measure_latency(model, ck.params, blocks.front(), 10);
  fs::create_directories(out);
  std::ofstream rep(out / "report.json");
  rep << report_json(cfg, m, latency, seed).dump(2) << "\n";
  std::cout << "oa " << m.oa << "% miou " << m.miou << "% avg_f1 " << m.avg_f1
            << "%\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& variants_arg,
               std::uint64_t seed, const fs::path& out) {
  RunConfig base = load_config(config_path);
  std::vector<std::string> names;
  std::stringstream ss(variants_arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "all")
      for (const auto& [v, key] : kVariants) names.push_back(v);
    else if (!item.empty())
      names.push_back(item);
  }
  std::vector<std::pair<std::string, RunConfig>> runs = {{"baseline", base}};
  for (const auto& name : names) runs.emplace_back(name, apply_variant(base, name));

  DatasetSpec spec = base.dataset_spec();
  fs::path root(base.data.root);
  auto train_blocks = load_split(root / base.data.train_dir, spec);
  auto eval_blocks = load_split(root / base.data.eval_dir, spec);

  fs::create_directories(out);
  std::ofstream csv(out / "ablate.csv");
  write_banner(csv, base, seed);
  csv << "variant,oa,miou,avg_f1,latency_ms\n";
  csv.precision(10);
  for (const auto& [name, cfg] : runs) {
    TrainArtifacts art =
        run_training(cfg, train_blocks, eval_blocks, seed, nullptr, nullptr);
    Model model(cfg.model);
    double latency = measure_latency(model, art.params, eval_blocks.front(), 5);
    csv << name << "," << art.last_eval.oa << "," << art.last_eval.miou << ","
        << art.last_eval.avg_f1 << "," << latency << "\n";
    csv.flush();
    std::cout << name << ": avg_f1 " << art.last_eval.avg_f1 << "%\n";
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  auto reports = run_gradcheck_suite(seed);
  bool all_pass = true;
  std::cout.precision(6);
  for (const auto& r : reports) {
    std::cout << r.name << " max_rel_err " << std::scientific << r.max_rel_err
              << " tol " << r.tol << (r.pass ? " PASS" : " FAIL") << "\n";
    all_pass = all_pass && r.pass;
  }
  bool mutant_caught = mutation_fixture_detected();
  std::cout << "mutation_fixture " << (mutant_caught ? "DETECTED" : "MISSED")
            << "\n";
  return all_pass && mutant_caught ? 0 : kExitNumerical;
}

int cmd_viz(const std::string& config_path, const std::string& ck_path,
            const std::string& block_path, int query_index, std::uint64_t seed,
            const fs::path& out) {
  RunConfig cfg = load_config(config_path);
  Checkpoint ck = load_checkpoint(ck_path);
  if (model_echo(ck.config_echo) != model_echo(cfg.echo))
    throw ConfigError("checkpoint model config does not match " + config_path);
  Model model(cfg.model);
  PointCloudBlock block =
      normalize_block(load_block(block_path, cfg.dataset_spec()));
  Tape tape;
  TapeParams p(tape, ck.params);
  RngState rng(seed);
  SegmentationOutput so = model.forward(p, tape, block, rng, false);
  fs::create_directories(out);
  for (std::size_t s = 0; s < so.stages.size(); ++s) {
    const StageDiag& d = so.stages[s];
    if (query_index < 0 || (!d.wca.size() && query_index != 0) ||
        (d.wca.size() && query_index >= d.wca.rows()))
      throw ConfigError("query index out of range for stage " +
                        std::to_string(s + 1));
    std::ofstream keep(out / ("keep_stage" + std::to_string(s + 1) + ".csv"));
    write_banner(keep, cfg, seed);
    keep << "point,keep_prob,selected\n";
    keep.precision(10);
    std::vector<char> sel(d.keep_prob.rows(), 0);
    for (int idx : d.selected) sel[idx] = 1;
    for (Eigen::Index i = 0; i < d.keep_prob.rows(); ++i)
      keep << i << "," << d.keep_prob(i, 0) << "," << int(sel[i]) << "\n";
    if (d.wca.size()) {
      std::ofstream wrow(out /
                         ("wca_row_stage" + std::to_string(s + 1) + ".csv"));
      write_banner(wrow, cfg, seed);
      wrow << "point,weight\n";
      wrow.precision(10);
      for (Eigen::Index j = 0; j < d.wca.cols(); ++j)
        wrow << j << "," << d.wca(query_index, j) << "\n";
    }
  }
  std::ofstream preds(out / "predictions.csv");
  write_banner(preds, cfg, seed);
  preds << "point,predicted,label\n";
  auto pv = so.predictions();
  for (std::size_t i = 0; i < pv.size(); ++i)
    preds << i << "," << pv[i] << "," << block.labels[i] << "\n";
  return 0;
}

int cmd_synth(int blocks, int eval_blocks, int points, int classes,
              std::uint64_t seed, const fs::path& out) {
  if (blocks < 1 || points < 1 || classes < 2)
    throw ConfigError("synth: need blocks >= 1, points >= 1, classes >= 2");
  auto write_split = [&](const fs::path& dir, int count, std::uint64_t s) {
    fs::create_directories(dir);
    auto generated = synth_generate(count, points, classes, s);
    for (std::size_t i = 0; i < generated.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "block_%04zu.blk", i);
      save_block(dir / name, generated[i], classes);
    }
  };
  write_split(out / "train", blocks, seed);
  write_split(out / "eval", eval_blocks, seed + 1);
  std::cout << "wrote " << blocks << " train and " << eval_blocks
            << " eval blocks to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-cloud segmentation trainer"};
  app.require_subcommand(1);

  std::string config_path, ck_path, block_path, variants = "all";
  std::uint64_t seed = 0;
  std::string out = "runs/out";
  int query_index = 0;
  int synth_blocks = 32, synth_eval = 8, synth_points = 512, synth_classes = 6;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "config file path");
    if (needs_config) opt->required();
    cmd->add_option("--seed", seed, "rng seed");
    cmd->add_option("--out", out, "output directory");
  };

  CLI::App* tr = app.add_subcommand("train", "train a model");
  add_common(tr, true);
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev, true);
  ev->add_option("--checkpoint", ck_path, "checkpoint file")->required();
  CLI::App* ab = app.add_subcommand("ablate", "train and compare variants");
  add_common(ab, true);
  ab->add_option("--variants", variants,
                 "comma-separated variant names, or `all`");
  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference checks");
  add_common(gc, false);
  CLI::App* vz = app.add_subcommand("viz", "per-point dump files");
  add_common(vz, true);
  vz->add_option("--checkpoint", ck_path, "checkpoint file")->required();
  vz->add_option("--block", block_path, "input .blk file")->required();
  vz->add_option("--query-index", query_index, "attention-map query token");
  CLI::App* sy = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(sy, false);
  sy->add_option("--blocks", synth_blocks, "training block count");
  sy->add_option("--eval-blocks", synth_eval, "evaluation block count");
  sy->add_option("--points", synth_points, "points per block");
  sy->add_option("--classes", synth_classes, "class count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (tr->parsed()) return cmd_train(config_path, seed, out);
    if (ev->parsed()) return cmd_eval(config_path, ck_path, seed, out);
    if (ab->parsed()) return cmd_ablate(config_path, variants, seed, out);
    if (gc->parsed()) return cmd_gradcheck(seed);
    if (vz->parsed())
      return cmd_viz(config_path, ck_path, block_path, query_index, seed, out);
    if (sy->parsed())
      return cmd_synth(synth_blocks, synth_eval, synth_points, synth_classes,
                       seed, out);
  } catch (const TrainAbort& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
