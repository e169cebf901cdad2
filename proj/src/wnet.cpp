#include "dta/wnet.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

namespace dta {

void ModelConfig::validate() const {
  if (num_classes < 2) throw InvalidInput("config: need >= 2 classes");
  if (in_channels < 3) throw InvalidInput("config: need >= 3 channels");
  if (stages.empty()) throw InvalidInput("config: need >= 1 stage");
  for (const auto& s : stages) {
    if (s.width < 2 || s.width % 2 != 0)
      throw InvalidInput("config: stage width must be even and >= 2");
    if (s.ratio <= 0.0 || s.ratio > 1.0)
      throw InvalidInput("config: sparsify ratio must be in (0, 1]");
    if (s.temperature <= 0.0)
      throw InvalidInput("config: temperature must be positive");
  }
}

static int sparsify_count(double ratio, int n) {
  return std::max(1, static_cast<int>(std::ceil(ratio * n)));
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const int d1 = config_.stages[0].width;
  stem1_ = Lbr("stem.1", config_.in_channels, d1 / 2);
  stem2_ = Lbr("stem.2", d1 / 2, d1);
  for (std::size_t i = 0; i < config_.stages.size(); ++i) {
    const int d = config_.stages[i].width;
    std::string px = "stage" + std::to_string(i + 1);
    Stage st;
    st.lts = LtsBlock(px + ".lts", d);
    st.dta = DtaBlock(px + ".dta", d);
    st.dta_bias = PositionBias(px + ".dta.pos", std::max(8, d / 4));
    st.knn = KnnMlpBlock(px + ".knn", d, config_.knn_k);
    st.gfe = GfeBlock(px + ".gfe", d);
    st.head_lbr = Lbr(px + ".head", 2 * d, d);
    st.head_out = Linear{px + ".head.out", d, config_.num_classes};
    stages_.push_back(std::move(st));
    if (i > 0) {
      int prev = config_.stages[i - 1].width;
      transitions_.emplace_back("transition" + std::to_string(i), prev, d);
      dec_transitions_.emplace_back("dec_transition" + std::to_string(i), d,
                                    prev);
    }
  }
}

void Model::init(ParamStore& ps, RngState& rng) const {
  stem1_.init(ps, rng);
  stem2_.init(ps, rng);
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const Stage& st = stages_[i];
    st.lts.init(ps, rng);
    st.dta.init(ps, rng);
    st.dta_bias.init(ps, rng);
    st.knn.init(ps, rng);
    st.gfe.init(ps, rng);
    st.head_lbr.init(ps, rng);
    st.head_out.init(ps, rng);
  }
  for (const auto& tr : transitions_) tr.init(ps, rng);
  for (const auto& tr : dec_transitions_) tr.init(ps, rng);
}

TokenSet Model::run_stem(TapeParams& p, Tape& tape,
                         const PointCloudBlock& block, bool training) const {
  if (block.channels() != config_.in_channels)
    throw ShapeError("stem: block channel count does not match config");
  Var x = constant(tape, block.points);
  Var f = stem2_.forward(p, stem1_.forward(p, x, training), training);
  return TokenSet{f, block.points.leftCols(3)};
}

Var Model::run_head(TapeParams& p, const Stage& st, const TokenSet& tokens,
                    bool training) const {
  Var global = max_rows(tokens.features);
  Var cat = concat_cols(tokens.features, repeat_row(global, tokens.count()));
  return st.head_out.forward(p, st.head_lbr.forward(p, cat, training));
}

Model::Aggregated Model::run_select_aggregate(TapeParams& p, Tape& tape,
                                              const Stage& st,
                                              const TokenSet& tokens,
                                              const StageConfig& sc,
                                              RngState& rng,
                                              bool training) const {
  const int n = tokens.count();
  const int h = sparsify_count(sc.ratio, n);
  Aggregated out{};

  if (config_.lts == LtsMode::Learned) {
    Var glocal = st.lts.glocal_embed(p, tokens);
    DecisionScores scores = st.lts.decision_scores(p, glocal);
    out.pi = scores.pi;
    out.selection =
        st.lts.sparsify(tokens, scores, h, sc.temperature, rng, training);
  } else {
    // No learned scorer: keep probabilities degenerate to 1.
    out.pi = constant(tape, Mat::Ones(n, 1));
    out.selection = config_.lts == LtsMode::Fps
                        ? fps_sample(tokens, h)
                        : random_sample(tokens, h, rng);
  }

  switch (config_.dta) {
    case DtaMode::None:
      out.aggregated = out.selection.features;
      break;
    case DtaMode::KnnMlp:
      out.aggregated = st.knn.aggregate(p, out.selection.coords, tokens);
      break;
    case DtaMode::Wca:
    case DtaMode::Vca: {
      auto qkv = st.dta.project_qkv(p, out.selection.features, tokens.features);
      Var bias = st.dta_bias.forward(p, tape, out.selection.coords, tokens.coords);
      out.map = config_.dta == DtaMode::Vca
                    ? vca_map(qkv.q, qkv.k, bias, sc.width)
                    : wca_map(qkv.q, qkv.k, out.pi, bias, sc.width);
      out.aggregated = aggregate(*out.map, qkv.v);
      break;
    }
  }
  return out;
}

Model::Aggregated Model::run_front(TapeParams& p, Tape& tape, const Stage& st,
                                   const TokenSet& tokens,
                                   const StageConfig& sc, RngState& rng,
                                   bool training) const {
  Aggregated out = run_select_aggregate(p, tape, st, tokens, sc, rng, training);
  out.enhanced = config_.gfe_enabled
                     ? st.gfe.forward(p, out.aggregated, out.selection.coords,
                                      training, config_.gfe_pointwise,
                                      config_.gfe_channelwise)
                     : out.aggregated;
  return out;
}

// GFE over a batch: attention branches per block, the fused output LBR (and
// its batch norm) over the concatenation of all blocks' selected tokens.
std::vector<Var> Model::batch_gfe(TapeParams& p, Tape& tape, const Stage& st,
                                  const std::vector<Aggregated>& agg) const {
  std::vector<Var> enhanced(agg.size());
  if (!config_.gfe_enabled) {
    for (std::size_t b = 0; b < agg.size(); ++b)
      enhanced[b] = agg[b].aggregated;
    return enhanced;
  }
  std::vector<Var> s_parts, fp_parts, fc_parts;
  for (const Aggregated& a : agg) {
    Var s = a.aggregated;
    Var zero = constant(tape, Mat::Zero(s.rows(), s.cols()));
    s_parts.push_back(s);
    fp_parts.push_back(config_.gfe_pointwise
                           ? st.gfe.pointwise_attention(p, s, a.selection.coords)
                           : zero);
    fc_parts.push_back(config_.gfe_channelwise
                           ? st.gfe.channelwise_attention(p, s)
                           : zero);
  }
  Var fused = st.gfe.fuse(p, concat_rows(s_parts), concat_rows(fp_parts),
                          concat_rows(fc_parts), true);
  int r = 0;
  for (std::size_t b = 0; b < agg.size(); ++b) {
    int h = static_cast<int>(agg[b].aggregated.rows());
    enhanced[b] = slice_rows(fused, r, h);
    r += h;
  }
  return enhanced;
}

// Segmentation head over a batch: the global max-pool is per block, the
// LBR's batch norm sees all blocks' rows at once.
Var Model::batch_head(TapeParams& p, const Stage& st,
                      const std::vector<Var>& feats) const {
  std::vector<Var> parts;
  for (Var f : feats)
    parts.push_back(
        concat_cols(f, repeat_row(max_rows(f), static_cast<int>(f.rows()))));
  return st.head_out.forward(
      p, st.head_lbr.forward(p, concat_rows(parts), true));
}

TokenSet Model::stage_forward(TapeParams& p, Tape& tape, int stage_idx,
                              const TokenSet& tokens, RngState& rng,
                              bool training, StageDiag& diag) const {
  const Stage& st = stages_[stage_idx];
  const StageConfig& sc = config_.stages[stage_idx];
  Aggregated agg = run_front(p, tape, st, tokens, sc, rng, training);
  diag.selected = agg.selection.indices;
  diag.keep_prob = agg.pi.val();

  // Reconstruction: the WCA-map route when a map exists, otherwise
  // coordinate interpolation; the residual onto T is kept in all modes.
  ItrMode itr = config_.itr;
  if (!agg.map.has_value()) itr = ItrMode::Nearest;
  Var out{nullptr, -1};
  if (itr == ItrMode::WcaMap) {
    diag.wca = agg.map->wm.val();
    diag.map_produced_id = agg.map->wm.id;
    diag.map_consumed_id = agg.map->wm.id;  // same tape node, never recomputed
    out = reconstruct(agg.enhanced, tokens.features, *agg.map);
  } else {
    InterpMode mode = itr == ItrMode::Trilinear ? InterpMode::Trilinear
                                                : InterpMode::Nearest;
    Var up = interpolate_up(agg.enhanced, agg.selection.coords, tokens.coords,
                            mode);
    out = add(up, tokens.features);
    if (agg.map.has_value()) diag.wca = agg.map->wm.val();
  }
  return TokenSet{out, tokens.coords};
}

SegmentationOutput Model::forward(TapeParams& p, Tape& tape,
                                  const PointCloudBlock& block, RngState& rng,
                                  bool training) const {
  SegmentationOutput out;
  TokenSet tokens = run_stem(p, tape, block, training);

  if (config_.arch == Arch::Wnet) {
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      if (i > 0) {
        tokens.features = transitions_[i - 1].forward(p, tokens.features, training);
      }
      StageDiag diag;
      tokens = stage_forward(p, tape, static_cast<int>(i), tokens, rng,
                             training, diag);
      if (tokens.count() != block.count())
        throw ShapeError("stage output count != N");
      out.stages.push_back(std::move(diag));
      out.logits.push_back(run_head(p, stages_[i], tokens, training));
    }
    return out;
  }

  // U-net ablation: encoder stages sparsify progressively without ITR; a
  // symmetric decoder consumes the stored WCA-maps in reverse.
  std::vector<Aggregated> enc(stages_.size());
  std::vector<TokenSet> enc_inputs;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    if (i > 0)
      tokens.features = transitions_[i - 1].forward(p, tokens.features, training);
    enc_inputs.push_back(tokens);
    enc[i] = run_front(p, tape, stages_[i], tokens, config_.stages[i], rng,
                       training);
    StageDiag diag;
    diag.selected = enc[i].selection.indices;
    diag.keep_prob = enc[i].pi.val();
    if (enc[i].map.has_value()) {
      diag.wca = enc[i].map->wm.val();
      diag.map_produced_id = enc[i].map->wm.id;
    }
    out.stages.push_back(std::move(diag));
    tokens = TokenSet{enc[i].enhanced, enc[i].selection.coords};
  }
  Var feat = enc.back().enhanced;
  for (int i = static_cast<int>(stages_.size()) - 1; i >= 0; --i) {
    if (enc[i].map.has_value()) {
      out.stages[i].map_consumed_id = enc[i].map->wm.id;
      feat = reconstruct(feat, enc_inputs[i].features, *enc[i].map);
    } else {
      Var up = interpolate_up(feat, enc[i].selection.coords,
                              enc_inputs[i].coords, InterpMode::Nearest);
      feat = add(up, enc_inputs[i].features);
    }
    if (i > 0) feat = dec_transitions_[i - 1].forward(p, feat, training);
  }
  if (feat.rows() != block.count()) throw ShapeError("decoder output count != N");
  out.logits.push_back(
      run_head(p, stages_.front(), TokenSet{feat, block.points.leftCols(3)},
               training));
  return out;
}

std::vector<Var> Model::forward_batch(
    TapeParams& p, Tape& tape,
    const std::vector<const PointCloudBlock*>& blocks, RngState& rng) const {
  const std::size_t nb = blocks.size();
  if (nb == 0) throw InvalidInput("forward_batch: empty batch");
  Eigen::Index total = 0;
  for (const PointCloudBlock* block : blocks) {
    if (block->channels() != config_.in_channels)
      throw ShapeError("stem: block channel count does not match config");
    total += block->count();
  }
  Mat pts(total, config_.in_channels);
  std::vector<int> offset(nb), count(nb);
  std::vector<Mat> coords(nb);
  {
    Eigen::Index r = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      offset[b] = static_cast<int>(r);
      count[b] = static_cast<int>(blocks[b]->count());
      pts.middleRows(r, count[b]) = blocks[b]->points;
      coords[b] = blocks[b]->points.leftCols(3);
      r += count[b];
    }
  }
  Var x = constant(tape, pts);
  Var feat = stem2_.forward(p, stem1_.forward(p, x, true), true);

  std::vector<Var> logits;
  const auto itr_block = [&](const Stage& st, const Aggregated& agg,
                             Var enhanced, Var in_feat, const Mat& in_coords) {
    ItrMode itr = config_.itr;
    if (!agg.map.has_value()) itr = ItrMode::Nearest;
    if (itr == ItrMode::WcaMap)
      return reconstruct(enhanced, in_feat, *agg.map);
    InterpMode mode = itr == ItrMode::Trilinear ? InterpMode::Trilinear
                                                : InterpMode::Nearest;
    return add(interpolate_up(enhanced, agg.selection.coords, in_coords, mode),
               in_feat);
  };

  if (config_.arch == Arch::Wnet) {
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      const Stage& st = stages_[i];
      const StageConfig& sc = config_.stages[i];
      if (i > 0) feat = transitions_[i - 1].forward(p, feat, true);
      std::vector<Var> in_feats(nb);
      std::vector<Aggregated> agg(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        in_feats[b] = slice_rows(feat, offset[b], count[b]);
        agg[b] = run_select_aggregate(p, tape, st,
                                      TokenSet{in_feats[b], coords[b]}, sc,
                                      rng, true);
      }
      std::vector<Var> enhanced = batch_gfe(p, tape, st, agg);
      std::vector<Var> outs(nb);
      for (std::size_t b = 0; b < nb; ++b)
        outs[b] = itr_block(st, agg[b], enhanced[b], in_feats[b], coords[b]);
      feat = concat_rows(outs);
      logits.push_back(batch_head(p, st, outs));
    }
    return logits;
  }

  // U-net: encoder keeps the selected tokens; the decoder reverses with the
  // stored maps. Offsets shrink with the per-block selection counts.
  std::vector<std::vector<Aggregated>> enc(stages_.size());
  std::vector<std::vector<Var>> enc_in(stages_.size());
  std::vector<std::vector<Mat>> enc_coords(stages_.size());
  std::vector<Mat> cur_coords = coords;
  std::vector<int> cur_count = count;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const Stage& st = stages_[i];
    if (i > 0) feat = transitions_[i - 1].forward(p, feat, true);
    enc[i].resize(nb);
    enc_in[i].resize(nb);
    enc_coords[i] = cur_coords;
    std::vector<Var> sel(nb);
    int r = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      enc_in[i][b] = slice_rows(feat, r, cur_count[b]);
      r += cur_count[b];
      enc[i][b] = run_select_aggregate(p, tape, st,
                                       TokenSet{enc_in[i][b], cur_coords[b]},
                                       config_.stages[i], rng, true);
    }
    std::vector<Var> enhanced = batch_gfe(p, tape, st, enc[i]);
    for (std::size_t b = 0; b < nb; ++b) {
      cur_coords[b] = enc[i][b].selection.coords;
      cur_count[b] = static_cast<int>(enhanced[b].rows());
      sel[b] = enhanced[b];
    }
    feat = concat_rows(sel);
  }
  for (int i = static_cast<int>(stages_.size()) - 1; i >= 0; --i) {
    std::vector<Var> up(nb);
    int r = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      Var fb = slice_rows(feat, r, cur_count[b]);
      r += cur_count[b];
      up[b] = itr_block(stages_[i], enc[i][b], fb, enc_in[i][b],
                        enc_coords[i][b]);
      cur_count[b] = static_cast<int>(up[b].rows());
    }
    feat = concat_rows(up);
    if (i > 0) feat = dec_transitions_[i - 1].forward(p, feat, true);
  }
  std::vector<Var> final_feats(nb);
  {
    int r = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      final_feats[b] = slice_rows(feat, r, count[b]);
      r += count[b];
    }
  }
  logits.push_back(batch_head(p, stages_.front(), final_feats));
  return logits;
}

std::vector<int> SegmentationOutput::predictions() const {
  const Mat& l = logits.back().val();
  std::vector<int> pred(l.rows());
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    Eigen::Index j;
    l.row(i).maxCoeff(&j);
    pred[i] = static_cast<int>(j);
  }
  return pred;
}

Var Model::multi_loss(const SegmentationOutput& out,
                      const std::vector<int>& labels) const {
  return multi_loss_logits(out.logits, labels);
}

Var Model::multi_loss_logits(const std::vector<Var>& stage_logits,
                             const std::vector<int>& labels) const {
  for (int label : labels)
    if (label < 0 || label >= config_.num_classes)
      throw InvalidInput("multi_loss: label out of range");
  Var total{nullptr, -1};
  for (const Var& logits : stage_logits) {
    if (static_cast<std::size_t>(logits.rows()) != labels.size())
      throw ShapeError("multi_loss: label count != N");
    Var nll = sub(logsumexp_rows(logits), pick(logits, labels));
    Var stage_loss = scale(sum_all(nll), 1.0 / double(labels.size()));
    total = total.id < 0 ? stage_loss : add(total, stage_loss);
  }
  return scale(total, 1.0 / double(stage_logits.size()));
}

void SgdMomentum::step(ParamStore& ps, double lr) {
  for (auto& [name, e] : ps) {
    if (!ParamStore::trainable(name)) continue;
    auto it = velocity_.find(name);
    if (it == velocity_.end())
      it = velocity_.emplace(name, Mat::Zero(e.value.rows(), e.value.cols()))
               .first;
    it->second = momentum_ * it->second + e.grad + weight_decay_ * e.value;
    e.value -= lr * it->second;
  }
}

double cosine_lr(double lr0, int epoch, int total_epochs) {
  return lr0 * 0.5 * (1.0 + std::cos(M_PI * double(epoch) / double(total_epochs)));
}

double train_step(const Model& model, ParamStore& ps, SgdMomentum& opt,
                  const std::vector<const PointCloudBlock*>& batch,
                  double lr, RngState& rng) {
  ps.zero_grads();
  Tape tape;
  TapeParams p(tape, ps);
  std::vector<Var> logits = model.forward_batch(p, tape, batch, rng);
  std::vector<int> labels;
  for (const PointCloudBlock* block : batch)
    labels.insert(labels.end(), block->labels.begin(), block->labels.end());
  Var loss = model.multi_loss_logits(logits, labels);
  double value = loss.val()(0, 0);
  if (!std::isfinite(value))
    throw TrainAbort("non-finite loss on batch starting at block " +
                     batch.front()->id);
  tape.backward(loss.id);
  p.flush_grads();
  opt.step(ps, lr);
  return value;
}

ConfusionMatrix evaluate(const Model& model, ParamStore& ps,
                         const std::vector<PointCloudBlock>& blocks) {
  ConfusionMatrix cm(model.config().num_classes);
  RngState rng(0);  // unused in eval mode
  for (const auto& block : blocks) {
    Tape tape;
    TapeParams p(tape, ps);
    SegmentationOutput out = model.forward(p, tape, block, rng, false);
    cm.update(out.predictions(), block.labels);
  }
  return cm;
}

double measure_latency(const Model& model, ParamStore& ps,
                       const PointCloudBlock& block, int repeats) {
  RngState rng(0);
  auto once = [&]() {
    Tape tape;
    TapeParams p(tape, ps);
    model.forward(p, tape, block, rng, false);
  };
  for (int i = 0; i < 3; ++i) once();
  std::vector<double> times;
  times.reserve(repeats);
  for (int i = 0; i < repeats; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    once();
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

// ---- checkpoint archive ----------------------------------------------

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
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}
static void write_u64(std::ostream& out, std::uint64_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
  write_u32(out, static_cast<std::uint32_t>(v >> 32));
}
static std::uint64_t read_u64(std::istream& in) {
  std::uint64_t lo = read_u32(in);
  std::uint64_t hi = read_u32(in);
  return lo | (hi << 32);
}
static void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
static std::string read_string(std::istream& in) {
  std::string s(read_u32(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}
static void write_mat(std::ostream& out, const Mat& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::uint64_t u;
      double d = m(i, j);
      std::memcpy(&u, &d, 8);
      write_u64(out, u);
    }
}
static Mat read_mat(std::istream& in) {
  int rows = static_cast<int>(read_u32(in));
  int cols = static_cast<int>(read_u32(in));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      std::uint64_t u = read_u64(in);
      double d;
      std::memcpy(&d, &u, 8);
      m(i, j) = d;
    }
  return m;
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ck) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out.write("DTAC", 4);
  write_u32(out, 1);  // version
  write_u64(out, ck.seed);
  write_u32(out, static_cast<std::uint32_t>(ck.epoch));
  write_string(out, ck.config_echo);
  write_u32(out, static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, e] : ck.params) {
    write_string(out, name);
    write_mat(out, e.value);
  }
  write_u32(out, static_cast<std::uint32_t>(ck.velocities.size()));
  for (const auto& [name, v] : ck.velocities) {
    write_string(out, name);
    write_mat(out, v);
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "DTAC", 4) != 0)
    throw DataError(file.string() + ": bad checkpoint magic");
  if (read_u32(in) != 1) throw DataError("unsupported checkpoint version");
  Checkpoint ck;
  ck.seed = read_u64(in);
  ck.epoch = static_cast<int>(read_u32(in));
  ck.config_echo = read_string(in);
  std::uint32_t np = read_u32(in);
  for (std::uint32_t i = 0; i < np; ++i) {
    std::string name = read_string(in);
    Mat m = read_mat(in);
    ck.params.add(name, static_cast<int>(m.rows()), static_cast<int>(m.cols())) =
        m;
  }
  std::uint32_t nv = read_u32(in);
  for (std::uint32_t i = 0; i < nv; ++i) {
    std::string name = read_string(in);
    ck.velocities[name] = read_mat(in);
  }
  return ck;
}

}  // namespace dta
