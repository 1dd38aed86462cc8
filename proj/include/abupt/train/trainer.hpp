#pragma once

// Training loop: batch size 1, fresh supernode / anchor / query draws every
// step, LION with clipping and an EMA copy of the weights. The optional
// second stage resumes from the first-stage weights and learns the vorticity
// as the curl of the decoded velocity.

#include "abupt/data/source_points.hpp"
#include "abupt/data/transforms.hpp"
#include "abupt/model/divfree.hpp"
#include "abupt/train/loss.hpp"
#include "abupt/train/optim.hpp"

#include <array>
#include <chrono>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace abupt::train {

enum class Stage { kPretrain, kDivfree };

inline std::string to_string(Stage s) { return s == Stage::kPretrain ? "pretrain" : "divfree"; }

struct TrainConfig {
  Index steps = 0;   // 0: epochs x training samples
  Index epochs = 500;
  Index batch_size = 1;
  LrSchedule schedule{5e-5, 1e-6, 0.05};
  double weight_decay = 0.05;
  double grad_clip = 1.0;
  double ema = 0.9999;
  data::LossMode loss_mode = data::LossMode::kAnchors;
  data::PointsMode points_mode = data::PointsMode::kCfdMesh;
  Index surface_queries = 0;
  Index volume_queries = 0;
  Index grid_resolution = 8;
  bool half_activations = false;
  // Divergence-free finetuning.
  bool divfree = false;
  double finetune_lr = 2e-5;
  double finetune_fraction = 0.2;
  Index finetune_steps = 0;  // 0: finetune_fraction x first-stage steps
  double curl_step = model::kDefaultCurlStep;

  void validate() const {
    schedule.validate();
    require(schedule.warmup > 0.0, "train config: warmup fraction must be in (0, 1)");
    require(steps >= 0 && epochs >= 1, "train config: steps must be >= 0 and epochs >= 1");
    require(batch_size == 1, "train config: only batch size 1 is supported");
    require(weight_decay >= 0.0, "train config: negative weight decay");
    require(grad_clip > 0.0, "train config: grad clip must be positive");
    require(ema >= 0.0 && ema <= 1.0, "train config: ema factor must be in [0, 1]");
    require(surface_queries >= 0 && volume_queries >= 0, "train config: negative query count");
    require(finetune_lr > schedule.end, "train config: finetune lr must exceed the end lr");
    require(finetune_fraction > 0.0 && finetune_steps >= 0, "train config: invalid finetune length");
    require(curl_step > 0.0, "train config: curl step must be positive");
    if (loss_mode != data::LossMode::kAnchors || points_mode == data::PointsMode::kCadGrid) {
      require(surface_queries > 0 && volume_queries > 0, "train config: this loss / points mode needs query points");
    }
  }

  Index stage_steps(Stage s, Index train_samples) const {
    const Index first = steps > 0 ? steps : epochs * train_samples;
    if (s == Stage::kPretrain) return first;
    if (finetune_steps > 0) return finetune_steps;
    return std::max<Index>(1, static_cast<Index>(std::llround(finetune_fraction * static_cast<double>(first))));
  }

  LrSchedule stage_schedule(Stage s) const {
    if (s == Stage::kPretrain) return schedule;
    return LrSchedule{finetune_lr, schedule.end, 0.0};
  }
};

/// Field order of the per-field loss columns.
inline constexpr std::array<const char*, 5> kFieldNames{"surface_p", "surface_tau", "volume_p", "volume_u",
                                                        "volume_omega"};

struct LogRow {
  Stage stage = Stage::kPretrain;
  Index step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::array<double, 5> field{};
  double grad_norm = 0.0;
  double wall_seconds = 0.0;
};

inline std::string log_header() {
  std::string h = "stage,step,lr,loss";
  for (const char* f : kFieldNames) h += std::string(",loss_") + f;
  return h + ",grad_norm,wall_s";
}

inline std::string log_line(const LogRow& r) {
  char buf[64];
  std::string s = to_string(r.stage) + "," + std::to_string(r.step);
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    s += buf;
  };
  num(r.lr);
  num(r.loss);
  for (double f : r.field) num(f);
  num(r.grad_norm);
  num(r.wall_seconds);
  return s;
}

/// Normalized targets of one sample, computed once.
struct SampleTargets {
  Matrix<double> surface;
  Matrix<double> volume;       // direct-head layout
  Matrix<double> volume_curl;  // vorticity columns sqrt-signed
};

inline SampleTargets sample_targets(const data::SimulationSample& s, const geom::NormalizationStats& st) {
  return {data::surface_targets(s, st), data::volume_targets(s, st, false), data::volume_targets(s, st, true)};
}

template <class T>
struct Objective {
  ad::Var<T> loss;
  std::array<double, 5> field{};
};

namespace detail {

template <class T>
Matrix<T> gather_targets(const Matrix<double>& all, const data::BranchPoints& bp) {
  const Index na = static_cast<Index>(bp.anchors.size());
  Matrix<T> t = Matrix<T>::Zero(na + static_cast<Index>(bp.queries.size()), all.cols());
  if (bp.anchors_have_targets) {
    for (Index i = 0; i < na; ++i) t.row(i) = all.row(bp.anchor_ids[static_cast<std::size_t>(i)]).template cast<T>();
  }
  for (std::size_t i = 0; i < bp.query_ids.size(); ++i) {
    t.row(na + static_cast<Index>(i)) = all.row(bp.query_ids[i]).template cast<T>();
  }
  return t;
}

template <class P, class Q>
double field_mse(const P& pred, const Q& target, std::span<const std::uint8_t> mask, Index c0, Index c1) {
  return masked_mse_value(pred, target, mask, column_range(c0, c1));
}

}  // namespace detail

/// Training loss of one sample for sourced points. Both branches' losses are
/// averaged. In the first stage of a divergence-free run the vorticity
/// columns are left out; in the divergence-free stage the volume vorticity is
/// the curl of the decoded velocity, compared after the sqrt-signed transform.
template <class T>
Objective<T> training_objective(ad::Graph<T>& g, const model::AbUpt<T>& model, const data::SimulationSample& sample,
                                const SampleTargets& targets, const data::SourcedPoints& pts,
                                const geom::NormalizationStats& stats, Stage stage, data::LossMode loss_mode,
                                bool exclude_vorticity, double curl_step) {
  using model::Branch;
  model::ForwardInput in{sample.geometry(), pts.supernode_ids, pts.branch[0].anchors, pts.branch[0].queries,
                         pts.branch[1].anchors, pts.branch[1].queries};
  if (stage == Stage::kDivfree) in.volume_queries.clear();  // decoded below through the curl stencil
  auto out = model::forward(g, model, in, stats);

  Objective<T> obj;
  std::array<ad::Var<T>, model::kBranches> losses;

  // Surface.
  {
    const auto& bp = pts.branch[0];
    auto pred = bp.queries.empty() ? out.anchors[0] : ad::concat_rows(out.anchors[0], out.queries[0]);
    const Matrix<T> tgt = detail::gather_targets<T>(targets.surface, bp);
    const auto mask = pts.loss_mask(Branch::kSurface, loss_mode);
    losses[0] = training_loss(pred, tgt, mask, column_range(0, 4));
    obj.field[0] = detail::field_mse(pred.value(), tgt, mask, 0, 1);
    obj.field[1] = detail::field_mse(pred.value(), tgt, mask, 1, 4);
  }

  // Volume.
  const auto& bp = pts.branch[1];
  const auto mask = pts.loss_mask(Branch::kVolume, loss_mode);
  if (stage == Stage::kPretrain) {
    auto pred = bp.queries.empty() ? out.anchors[1] : ad::concat_rows(out.anchors[1], out.queries[1]);
    const Matrix<T> tgt = detail::gather_targets<T>(targets.volume, bp);
    losses[1] = training_loss(pred, tgt, mask, column_range(0, exclude_vorticity ? 4 : 7));
    obj.field[2] = detail::field_mse(pred.value(), tgt, mask, 0, 1);
    obj.field[3] = detail::field_mse(pred.value(), tgt, mask, 1, 4);
    obj.field[4] = detail::field_mse(pred.value(), tgt, mask, 4, 7);
  } else {
    const Matrix<T> all = detail::gather_targets<T>(targets.volume_curl, bp);
    std::vector<Vec3> pos_phys;
    IndexList rows;
    const Index na = static_cast<Index>(bp.anchors.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      const auto r = static_cast<Index>(i);
      pos_phys.push_back(r < na ? bp.anchors[i] : bp.queries[i - static_cast<std::size_t>(na)]);
      rows.push_back(r);
    }
    require(!rows.empty(), "training objective: empty volume mask");
    Matrix<T> tgt(static_cast<Index>(rows.size()), 7);
    for (std::size_t i = 0; i < rows.size(); ++i) tgt.row(static_cast<Index>(i)) = all.row(rows[i]);
    const auto x_net = model::to_network(pos_phys, stats);
    auto dec = model::decode_divfree(g, model, out.context.cache, x_net, curl_step, stats.coord_scale(),
                                     data::velocity_scale(stats));
    RowVector<T> sigma(3);
    for (int c = 0; c < 3; ++c) sigma(c) = static_cast<T>(stats.vorticity_sigma[c]);
    auto pred = ad::concat_cols(ad::slice_cols(dec.center, 0, 4), ad::sqrt_magnitude(dec.vorticity, sigma));
    const std::vector<std::uint8_t> all_rows(rows.size(), 1);
    losses[1] = training_loss(pred, tgt, all_rows, column_range(0, 7));
    obj.field[2] = detail::field_mse(pred.value(), tgt, all_rows, 0, 1);
    obj.field[3] = detail::field_mse(pred.value(), tgt, all_rows, 1, 4);
    obj.field[4] = detail::field_mse(pred.value(), tgt, all_rows, 4, 7);
  }
  obj.loss = ad::scale(ad::add(losses[0], losses[1]), T(0.5));
  return obj;
}

inline data::SourceConfig source_config(const model::ModelConfig& mc, const TrainConfig& tc,
                                        const geom::NormalizationStats& stats) {
  data::SourceConfig s;
  s.supernodes = mc.supernodes;
  s.surface_anchors = mc.surface_anchors;
  s.volume_anchors = mc.volume_anchors;
  s.surface_queries = tc.surface_queries;
  s.volume_queries = tc.volume_queries;
  s.grid_resolution = tc.grid_resolution;
  s.grid_min = stats.bbox_min;
  s.grid_max = stats.bbox_max;
  return s;
}

template <class T>
struct StageResult {
  model::ModelWeights<T> weights;
  model::ModelWeights<T> ema;
  std::vector<LogRow> log;
};

/// Runs one training stage starting from `init`.
template <class T>
StageResult<T> run_stage(const model::ModelConfig& mc, const TrainConfig& tc, const geom::NormalizationStats& stats,
                         std::span<const data::SimulationSample> train, model::ModelWeights<T> init, Stage stage,
                         std::uint64_t seed, const std::function<void(const LogRow&)>& on_step = {}) {
  tc.validate();
  mc.validate();
  require(!train.empty(), "train: the training split is empty");
  const Index n_samples = static_cast<Index>(train.size());
  const Index total = tc.stage_steps(stage, n_samples);
  const LrSchedule sched = tc.stage_schedule(stage);
  const data::SourceConfig src = source_config(mc, tc, stats);

  std::vector<SampleTargets> targets;
  targets.reserve(train.size());
  for (const auto& s : train) targets.push_back(sample_targets(s, stats));

  StageResult<T> r;
  r.weights = std::move(init);
  r.ema = r.weights.template cast<T>();
  model::AbUpt<T> model(mc, r.weights);
  Lion<T> opt(r.weights);
  const std::uint64_t base = Rng::derive(seed, stage == Stage::kPretrain ? 0x1111u : 0x2222u);
  IndexList order(static_cast<std::size_t>(n_samples));
  std::iota(order.begin(), order.end(), Index{0});
  const auto t0 = std::chrono::steady_clock::now();

  for (Index step = 0; step < total; ++step) {
    if (step % n_samples == 0) {
      Rng shuffle(Rng::derive(base, 0x5u + static_cast<std::uint64_t>(step / n_samples)));
      for (Index i = n_samples - 1; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(shuffle.below(static_cast<std::uint64_t>(i + 1)))]);
      }
    }
    const auto si = static_cast<std::size_t>(order[static_cast<std::size_t>(step % n_samples)]);
    const auto pts = data::source_points(train[si], tc.points_mode, src, Rng::derive(base, 0x100000u + static_cast<std::uint64_t>(step)));

    const double lr = sched(step, total);
    r.weights.zero_grad();
    LogRow row;
    {
      ad::Graph<T> g(true);
      g.set_half_activations(tc.half_activations && stage == Stage::kPretrain);
      auto obj = training_objective(g, model, train[si], targets[si], pts, stats, stage, tc.loss_mode,
                                    tc.divfree && stage == Stage::kPretrain, tc.curl_step);
      row.loss = static_cast<double>(obj.loss.value()(0, 0));
      row.field = obj.field;
      if (!std::isfinite(row.loss)) {
        throw NumericDivergence(to_string(stage) + " step " + std::to_string(step) + ": loss is not finite");
      }
      g.backward(obj.loss);
    }
    row.grad_norm = clip_gradients(r.weights, tc.grad_clip);
    if (!std::isfinite(row.grad_norm)) {
      throw NumericDivergence(to_string(stage) + " step " + std::to_string(step) + ": gradient is not finite");
    }
    opt.step(r.weights, lr, tc.weight_decay);
    ema_update(r.ema, r.weights, tc.ema);

    row.stage = stage;
    row.step = step;
    row.lr = lr;
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.log.push_back(row);
    if (on_step) on_step(row);
  }
  if (!r.weights.all_finite()) throw NumericDivergence(to_string(stage) + ": weights became non-finite");
  return r;
}

template <class T>
struct TrainResult {
  StageResult<T> pretrain;
  std::optional<StageResult<T>> divfree;

  const StageResult<T>& final_stage() const { return divfree ? *divfree : pretrain; }
};

/// Full protocol: the first stage from freshly initialized weights, then the
/// divergence-free stage when enabled.
template <class T>
TrainResult<T> train_run(std::span<const data::SimulationSample> train, const model::ModelConfig& mc,
                         const TrainConfig& tc, const geom::NormalizationStats& stats, std::uint64_t seed,
                         const std::function<void(const LogRow&)>& on_step = {}) {
  TrainResult<T> out{run_stage<T>(mc, tc, stats, train, model::init_weights<T>(mc, seed), Stage::kPretrain, seed, on_step),
                     std::nullopt};
  if (tc.divfree) {
    out.divfree = run_stage<T>(mc, tc, stats, train, out.pretrain.weights.template cast<T>(), Stage::kDivfree, seed,
                               on_step);
  }
  return out;
}

}  // namespace abupt::train
