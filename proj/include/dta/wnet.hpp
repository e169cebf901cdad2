#pragma once

#include <filesystem>
#include <optional>

#include "dta/ablations.hpp"
#include "dta/data.hpp"
#include "dta/dta_block.hpp"
#include "dta/gfe.hpp"
#include "dta/itr.hpp"
#include "dta/lts.hpp"
#include "dta/metrics.hpp"

namespace dta {

enum class LtsMode { Learned, Fps, Random };
enum class DtaMode { Wca, None, KnnMlp, Vca };
enum class ItrMode { WcaMap, Trilinear, Nearest };
enum class Arch { Wnet, Unet };

struct StageConfig {
  int width = 64;
  double ratio = 0.25;
  double temperature = 1.0;
};

struct ModelConfig {
  int in_channels = 6;
  int num_classes = 6;
  std::vector<StageConfig> stages = {{64, 0.25, 1.0}, {128, 0.25, 1.0}};
  Arch arch = Arch::Wnet;
  LtsMode lts = LtsMode::Learned;
  DtaMode dta = DtaMode::Wca;
  bool gfe_enabled = true;
  bool gfe_pointwise = true;
  bool gfe_channelwise = true;
  ItrMode itr = ItrMode::WcaMap;
  int knn_k = 16;

  void validate() const;
};

struct StageDiag {
  std::vector<int> selected;       // H indices into the stage input
  Mat keep_prob;                   // Nx1 (all-ones for non-learned LTS)
  Mat wca;                         // HxN map value (empty when absent)
  int map_produced_id = -1;        // tape node id DTA stored
  int map_consumed_id = -1;        // tape node id ITR consumed
};

struct SegmentationOutput {
  std::vector<Var> logits;         // one per stage (one total for U-net)
  std::vector<StageDiag> stages;

  std::vector<int> predictions() const;  // argmax of the last stage
};

// The full two-stage W-net (or U-net ablation). Layer objects carry only
// parameter names; values live in the ParamStore.
class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  void init(ParamStore& ps, RngState& rng) const;

  SegmentationOutput forward(TapeParams& p, Tape& tape,
                             const PointCloudBlock& block, RngState& rng,
                             bool training) const;

  // Training-mode forward over a whole batch on one tape. Attention and
  // token selection run per block; every batch-norm layer sees the
  // concatenated (batch x token) rows, so its statistics and running
  // estimates span the batch rather than one block at a time.
  std::vector<Var> forward_batch(TapeParams& p, Tape& tape,
                                 const std::vector<const PointCloudBlock*>& blocks,
                                 RngState& rng) const;

  // Mean over stages of per-point cross-entropy.
  Var multi_loss(const SegmentationOutput& out,
                 const std::vector<int>& labels) const;

  // Same loss over already-concatenated per-stage logits.
  Var multi_loss_logits(const std::vector<Var>& logits,
                        const std::vector<int>& labels) const;

 private:
  struct Stage {
    LtsBlock lts;
    DtaBlock dta;
    PositionBias dta_bias;
    KnnMlpBlock knn;
    GfeBlock gfe;
    Lbr head_lbr;      // 2D -> D
    Linear head_out;   // D -> K
  };

  TokenSet run_stem(TapeParams& p, Tape& tape,
                    const PointCloudBlock& block, bool training) const;
  Var run_head(TapeParams& p, const Stage& st, const TokenSet& tokens,
               bool training) const;
  // LTS -> DTA -> GFE; shared by both architectures.
  struct Aggregated {
    SparsifiedSelection selection;
    std::optional<WCAMap> map;
    Var aggregated;  // HxD, before GFE
    Var enhanced;    // HxD, after GFE (== aggregated when GFE is off)
    Var pi;          // Nx1
  };
  // LTS -> DTA only; GFE is applied by the caller so the batched path can
  // run its batch-norm over all blocks at once.
  Aggregated run_select_aggregate(TapeParams& p, Tape& tape, const Stage& st,
                                  const TokenSet& tokens,
                                  const StageConfig& sc, RngState& rng,
                                  bool training) const;
  Aggregated run_front(TapeParams& p, Tape& tape, const Stage& st,
                       const TokenSet& tokens, const StageConfig& sc,
                       RngState& rng, bool training) const;
  std::vector<Var> batch_gfe(TapeParams& p, Tape& tape, const Stage& st,
                             const std::vector<Aggregated>& agg) const;
  Var batch_head(TapeParams& p, const Stage& st,
                 const std::vector<Var>& feats) const;
  TokenSet stage_forward(TapeParams& p, Tape& tape, int stage_idx,
                         const TokenSet& tokens, RngState& rng, bool training,
                         StageDiag& diag) const;

  ModelConfig config_;
  Lbr stem1_, stem2_;
  std::vector<Stage> stages_;
  std::vector<Lbr> transitions_;      // D_{i-1} -> D_i between stages
  std::vector<Lbr> dec_transitions_;  // D_i -> D_{i-1} (U-net decoder)
};

// SGD with momentum and weight decay: v = mu*v + (g + wd*w); w -= lr*v.
class SgdMomentum {
 public:
  SgdMomentum(double momentum, double weight_decay)
      : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(ParamStore& ps, double lr);

  std::map<std::string, Mat>& velocities() { return velocity_; }

 private:
  double momentum_;
  double weight_decay_;
  std::map<std::string, Mat> velocity_;
};

double cosine_lr(double lr0, int epoch, int total_epochs);

struct TrainAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One optimizer update on the mean multi-loss gradient over the batch.
// Returns the batch loss. Throws TrainAbort naming the block on NaN loss.
double train_step(const Model& model, ParamStore& ps, SgdMomentum& opt,
                  const std::vector<const PointCloudBlock*>& batch,
                  double lr, RngState& rng);

// Eval-mode predictions tallied into a confusion matrix.
ConfusionMatrix evaluate(const Model& model, ParamStore& ps,
                         const std::vector<PointCloudBlock>& blocks);

// Median eval-mode forward wall time after 3 warm-ups, in milliseconds.
double measure_latency(const Model& model, ParamStore& ps,
                       const PointCloudBlock& block, int repeats);

// Checkpoint archive: config echo, parameters, optimizer state, epoch, seed.
struct Checkpoint {
  std::string config_echo;
  ParamStore params;
  std::map<std::string, Mat> velocities;
  int epoch = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace dta
