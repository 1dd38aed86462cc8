#pragma once

// Command implementations behind the `abupt` executable. Argument parsing
// lives in tools/abupt.cpp; everything here takes a resolved RunConfig.

#include "abupt/core/blob.hpp"
#include "abupt/data/dataset_io.hpp"
#include "abupt/data/synthetic.hpp"
#include "abupt/eval/bench.hpp"
#include "abupt/eval/evaluate.hpp"
#include "abupt/model/checkpoint.hpp"
#include "abupt/physics/forces.hpp"
#include "abupt/train/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace abupt::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kValidation = 1, kDivergence = 2, kIo = 3 };

struct GenerateConfig {
  Index train = 8;
  Index test = 2;
  std::string bodies = "mixed";  // sphere | box | mixed (alternating)
  data::SyntheticConfig synthetic;
};

struct RunConfig {
  std::string command;
  fs::path dataset;
  fs::path output;
  fs::path checkpoint;
  std::string split;  // empty: per-command default
  std::uint64_t seed = 0;
  int threads = 1;
  std::string precision = "f32";
  data::PointsMode mode = data::PointsMode::kCfdMesh;
  eval::HeadMode head = eval::HeadMode::kDirect;
  Index chunk_size = 4096;
  model::ModelConfig model;
  train::TrainConfig train;
  GenerateConfig generate;
  Index eval_repeats = 10;
  Index divergence_points = 100;
  eval::BenchConfig bench;
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw InvalidArgument(what + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw InvalidArgument(what + ": unknown key '" + key + "'");
  }
}

template <class V>
void set_if(const json& j, const char* key, V& field) {
  if (j.contains(key)) field = j.at(key).get<V>();
}

inline void apply_train(const json& j, train::TrainConfig& t) {
  reject_unknown(j,
                 {"steps", "epochs", "peak_lr", "end_lr", "warmup", "weight_decay", "grad_clip", "ema", "loss_mode",
                  "surface_queries", "volume_queries", "grid_resolution", "divfree", "finetune_lr",
                  "finetune_fraction", "finetune_steps", "curl_step"},
                 "train config");
  set_if(j, "steps", t.steps);
  set_if(j, "epochs", t.epochs);
  set_if(j, "peak_lr", t.schedule.peak);
  set_if(j, "end_lr", t.schedule.end);
  set_if(j, "warmup", t.schedule.warmup);
  set_if(j, "weight_decay", t.weight_decay);
  set_if(j, "grad_clip", t.grad_clip);
  set_if(j, "ema", t.ema);
  if (j.contains("loss_mode")) t.loss_mode = data::loss_mode_from_string(j.at("loss_mode").get<std::string>());
  set_if(j, "surface_queries", t.surface_queries);
  set_if(j, "volume_queries", t.volume_queries);
  set_if(j, "grid_resolution", t.grid_resolution);
  set_if(j, "divfree", t.divfree);
  set_if(j, "finetune_lr", t.finetune_lr);
  set_if(j, "finetune_fraction", t.finetune_fraction);
  set_if(j, "finetune_steps", t.finetune_steps);
  set_if(j, "curl_step", t.curl_step);
}

inline void apply_generate(const json& j, GenerateConfig& g) {
  reject_unknown(j,
                 {"train", "test", "bodies", "geometry_points", "surface_points", "volume_points", "modes",
                  "freestream", "density", "shear_coefficient"},
                 "generate config");
  set_if(j, "train", g.train);
  set_if(j, "test", g.test);
  set_if(j, "bodies", g.bodies);
  set_if(j, "geometry_points", g.synthetic.geometry_points);
  set_if(j, "surface_points", g.synthetic.surface_points);
  set_if(j, "volume_points", g.synthetic.volume_points);
  set_if(j, "modes", g.synthetic.modes);
  set_if(j, "freestream", g.synthetic.freestream);
  set_if(j, "density", g.synthetic.density);
  set_if(j, "shear_coefficient", g.synthetic.shear_coefficient);
}

inline void apply_bench(const json& j, eval::BenchConfig& b) {
  reject_unknown(j, {"sizes", "anchors", "dim", "heads", "chunk", "repeats", "warmup", "modes"}, "bench config");
  set_if(j, "sizes", b.sizes);
  set_if(j, "anchors", b.anchors);
  set_if(j, "dim", b.dim);
  set_if(j, "heads", b.heads);
  set_if(j, "chunk", b.chunk);
  set_if(j, "repeats", b.repeats);
  set_if(j, "warmup", b.warmup);
  set_if(j, "modes", b.modes);
}

}  // namespace detail

/// Applies a JSON configuration document on top of `cfg`.
inline void apply_config(const json& j, RunConfig& cfg) {
  detail::reject_unknown(j,
                         {"dataset", "output", "checkpoint", "split", "seed", "threads", "precision", "mode", "head",
                          "chunk_size", "model", "train", "generate", "eval", "bench"},
                         "config");
  try {
    if (j.contains("dataset")) cfg.dataset = j.at("dataset").get<std::string>();
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("checkpoint")) cfg.checkpoint = j.at("checkpoint").get<std::string>();
    detail::set_if(j, "split", cfg.split);
    detail::set_if(j, "seed", cfg.seed);
    detail::set_if(j, "threads", cfg.threads);
    detail::set_if(j, "precision", cfg.precision);
    if (j.contains("mode")) cfg.mode = data::points_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("head")) cfg.head = eval::head_mode_from_string(j.at("head").get<std::string>());
    detail::set_if(j, "chunk_size", cfg.chunk_size);
    if (j.contains("model")) cfg.model = model::model_config_from_json(j.at("model"), cfg.model);
    if (j.contains("train")) detail::apply_train(j.at("train"), cfg.train);
    if (j.contains("generate")) detail::apply_generate(j.at("generate"), cfg.generate);
    if (j.contains("eval")) {
      detail::reject_unknown(j.at("eval"), {"repeats", "divergence_points"}, "eval config");
      detail::set_if(j.at("eval"), "repeats", cfg.eval_repeats);
      detail::set_if(j.at("eval"), "divergence_points", cfg.divergence_points);
    }
    if (j.contains("bench")) detail::apply_bench(j.at("bench"), cfg.bench);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

inline void load_config_file(const fs::path& path, RunConfig& cfg) {
  const std::string text = io::read_file<IoError>(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_config(j, cfg);
}

/// Maps an exception from a command to its process exit code and prints the
/// diagnostic.
inline int guarded(const std::function<void()>& body, std::ostream& err = std::cerr) {
  try {
    body();
    return kOk;
  } catch (const NumericDivergence& e) {
    err << "error: numeric divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const IoError& e) {
    err << "error: I/O: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: I/O: " << e.what() << "\n";
    return kIo;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const CorruptData& e) {
    err << "error: corrupt data: " << e.what() << "\n";
    return kValidation;
  }
}

namespace detail {

inline void write_lines(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  std::string text = header + "\n";
  for (const auto& r : rows) text += r + "\n";
  io::write_file(path, text);
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void require_output(const RunConfig& cfg) {
  require(!cfg.output.empty(), cfg.command + ": --output is required");
}

inline data::Dataset open_dataset(const RunConfig& cfg) {
  require(!cfg.dataset.empty(), cfg.command + ": --dataset is required");
  if (!fs::exists(cfg.dataset / data::kManifestName)) {
    throw IoError("no dataset manifest under " + cfg.dataset.string());
  }
  return data::Dataset(cfg.dataset);
}

/// A checkpoint directory, or a run directory holding `preferred/`.
inline fs::path resolve_checkpoint(const fs::path& path, const std::string& preferred) {
  if (path.empty()) throw InvalidArgument("--checkpoint is required");
  if (fs::exists(path / "manifest")) return path;
  if (fs::exists(path / preferred / "manifest")) return path / preferred;
  throw InvalidArgument("no checkpoint found at " + path.string());
}

inline void check_precision(const RunConfig& cfg) {
  require(cfg.precision == "f32" || cfg.precision == "f16-mixed",
          "unknown precision '" + cfg.precision + "' (expected f32 or f16-mixed)");
}

inline train::TrainConfig train_config(const RunConfig& cfg) {
  check_precision(cfg);
  train::TrainConfig t = cfg.train;
  t.points_mode = cfg.mode;
  t.half_activations = cfg.precision == "f16-mixed";
  return t;
}

inline eval::EvalConfig eval_config(const RunConfig& cfg) {
  eval::EvalConfig e;
  e.chunk = cfg.chunk_size;
  e.threads = cfg.threads;
  e.head = cfg.head;
  e.curl_step = cfg.train.curl_step;
  e.divergence_points = cfg.divergence_points;
  e.points_mode = cfg.mode;
  e.grid_resolution = cfg.train.grid_resolution;
  e.repeats = cfg.eval_repeats;
  e.validate();
  return e;
}

/// Streams log rows to `<dir>/train_log.csv` as they are produced.
class LogWriter {
 public:
  explicit LogWriter(const fs::path& path) {
    fs::create_directories(path.parent_path());
    out_.open(path);
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    out_ << train::log_header() << "\n";
  }
  void operator()(const train::LogRow& r) { out_ << train::log_line(r) << "\n" << std::flush; }

 private:
  std::ofstream out_;
};

inline void save_stage(const fs::path& dir, const model::ModelConfig& mc, const geom::NormalizationStats& stats,
                       const train::StageResult<float>& r, const std::string& head) {
  const Index steps = static_cast<Index>(r.log.size());
  model::save_checkpoint(dir / "raw", mc, stats, r.weights, {"raw", head, steps});
  model::save_checkpoint(dir / "ema", mc, stats, r.ema, {"ema", head, steps});
}

inline json effective_config(const RunConfig& cfg, const model::ModelConfig& mc) {
  const auto& t = cfg.train;
  return {{"command", cfg.command},
          {"seed", cfg.seed},
          {"precision", cfg.precision},
          {"mode", data::to_string(cfg.mode)},
          {"model", model::to_json(mc)},
          {"train",
           {{"steps", t.steps},
            {"epochs", t.epochs},
            {"peak_lr", t.schedule.peak},
            {"end_lr", t.schedule.end},
            {"warmup", t.schedule.warmup},
            {"weight_decay", t.weight_decay},
            {"grad_clip", t.grad_clip},
            {"ema", t.ema},
            {"loss_mode", data::to_string(t.loss_mode)},
            {"surface_queries", t.surface_queries},
            {"volume_queries", t.volume_queries},
            {"grid_resolution", t.grid_resolution},
            {"divfree", t.divfree},
            {"finetune_lr", t.finetune_lr},
            {"finetune_fraction", t.finetune_fraction},
            {"finetune_steps", t.finetune_steps},
            {"curl_step", t.curl_step}}}};
}

inline std::string split_or(const RunConfig& cfg, const std::string& fallback) {
  return cfg.split.empty() ? fallback : cfg.split;
}

}  // namespace detail

/// Synthetic dataset with `train` and `test` splits.
inline void cmd_generate(const RunConfig& cfg, std::ostream& out = std::cout) {
  detail::require_output(cfg);
  const auto& g = cfg.generate;
  require(g.train >= 0 && g.test >= 0, "generate: sample counts must be non-negative");
  require(g.train + g.test > 0, "generate: at least one sample is required");
  require(g.bodies == "sphere" || g.bodies == "box" || g.bodies == "mixed",
          "generate: bodies must be sphere, box or mixed");
  g.synthetic.validate();

  std::vector<data::SimulationSample> samples;
  std::map<std::string, std::vector<std::string>> splits{{"train", {}}, {"test", {}}};
  const Index total = g.train + g.test;
  for (Index i = 0; i < total; ++i) {
    data::SyntheticConfig sc = g.synthetic;
    sc.body = g.bodies == "mixed" ? (i % 2 == 0 ? data::BodyKind::kSphere : data::BodyKind::kBox)
                                  : data::body_kind_from_string(g.bodies);
    char id[32];
    std::snprintf(id, sizeof id, "sample_%03lld", static_cast<long long>(i));
    samples.push_back(data::generate_synthetic(sc, Rng::derive(cfg.seed, static_cast<std::uint64_t>(i)), id));
    splits[i < g.train ? "train" : "test"].push_back(id);
  }
  data::DatasetConstants c;
  c.density = g.synthetic.density;
  c.velocity = g.synthetic.freestream;
  c.reference_area = std::numbers::pi * 0.25;  // frontal area of a unit-diameter body
  data::write_dataset(cfg.output, c, splits, samples);
  out << "wrote " << total << " samples to " << cfg.output.string() << "\n";
}

/// Trains from scratch on the `train` split; runs the divergence-free stage
/// too when `train.divfree` is set.
inline void cmd_train(const RunConfig& cfg, std::ostream& out = std::cout) {
  detail::require_output(cfg);
  const auto ds = detail::open_dataset(cfg);
  const train::TrainConfig tc = detail::train_config(cfg);
  tc.validate();
  cfg.model.validate();
  const auto samples = ds.load_split(detail::split_or(cfg, "train"));
  require(!samples.empty(), "train: the training split is empty");
  const auto stats = data::fit_normalization(samples);

  io::write_file(cfg.output / "config.json", detail::effective_config(cfg, cfg.model).dump(2) + "\n");
  detail::LogWriter log(cfg.output / "train_log.csv");
  const auto result = train::train_run<float>(samples, cfg.model, tc, stats, cfg.seed, std::ref(log));
  detail::save_stage(cfg.output, cfg.model, stats, result.final_stage(), result.divfree ? "divfree" : "direct");
  const auto& last = result.final_stage().log.back();
  out << "trained " << result.pretrain.log.size() + (result.divfree ? result.divfree->log.size() : 0)
      << " steps, final loss " << detail::fmt(last.loss) << "\n";
}

/// Second stage only, starting from a first-stage checkpoint.
inline void cmd_finetune_divfree(const RunConfig& cfg, std::ostream& out = std::cout) {
  detail::require_output(cfg);
  if (cfg.checkpoint.empty()) throw InvalidArgument("finetune-divfree: a first-stage --checkpoint is required");
  const fs::path ck_dir = detail::resolve_checkpoint(cfg.checkpoint, "raw");
  const auto ck = model::load_checkpoint(ck_dir);
  require(ck.info.head == "direct", "finetune-divfree: checkpoint is already divergence-free finetuned");
  const auto ds = detail::open_dataset(cfg);
  train::TrainConfig tc = detail::train_config(cfg);
  tc.divfree = true;
  tc.validate();
  const auto samples = ds.load_split(detail::split_or(cfg, "train"));
  require(!samples.empty(), "finetune-divfree: the training split is empty");

  io::write_file(cfg.output / "config.json", detail::effective_config(cfg, ck.config).dump(2) + "\n");
  detail::LogWriter log(cfg.output / "train_log.csv");
  const auto r = train::run_stage<float>(ck.config, tc, ck.stats, samples, ck.weights, train::Stage::kDivfree,
                                         cfg.seed, std::ref(log));
  detail::save_stage(cfg.output, ck.config, ck.stats, r, "divfree");
  out << "finetuned " << r.log.size() << " steps, final loss " << detail::fmt(r.log.back().loss) << "\n";
}

namespace detail {

// The network keeps a pointer to the weights, so both live on the heap.
struct LoadedModel {
  explicit LoadedModel(model::Checkpoint c)
      : ck(std::make_unique<model::Checkpoint>(std::move(c))), net(std::make_unique<model::AbUpt<float>>(ck->config, ck->weights)) {}
  std::unique_ptr<model::Checkpoint> ck;
  std::unique_ptr<model::AbUpt<float>> net;
};

inline LoadedModel load_model(const RunConfig& cfg) {
  return LoadedModel(model::load_checkpoint(resolve_checkpoint(cfg.checkpoint, "ema")));
}

inline std::string csv_row(const Vec3& x, const auto& values) {
  std::string s = fmt(x.x()) + "," + fmt(x.y()) + "," + fmt(x.z());
  for (Index c = 0; c < values.size(); ++c) s += "," + fmt(values(c));
  return s;
}

}  // namespace detail

/// Per-point physics-unit fields for every sample of the split:
/// `<id>_surface.csv` and `<id>_volume.csv`.
inline void cmd_predict(const RunConfig& cfg, std::ostream& out = std::cout) {
  detail::require_output(cfg);
  const auto m = detail::load_model(cfg);
  const auto ds = detail::open_dataset(cfg);
  const auto ec = detail::eval_config(cfg);
  for (const auto& id : ds.manifest().ids(detail::split_or(cfg, "test"))) {
    const auto s = ds.load(id);
    const auto p = eval::make_predictor(*m.net, m.ck->stats, s, cfg.mode, ec.grid_resolution, cfg.seed);
    const auto f = eval::predict_fields(p, s, ec);
    std::vector<std::string> rows;
    for (Index i = 0; i < f.surface.rows(); ++i) rows.push_back(detail::csv_row(s.surface_pos.vec3(i), f.surface.row(i)));
    detail::write_lines(cfg.output / (id + "_surface.csv"), "x,y,z,p,tau_x,tau_y,tau_z", rows);
    rows.clear();
    for (Index i = 0; i < f.volume.rows(); ++i) rows.push_back(detail::csv_row(s.volume_pos.vec3(i), f.volume.row(i)));
    detail::write_lines(cfg.output / (id + "_volume.csv"), "x,y,z,p,u_x,u_y,u_z,omega_x,omega_y,omega_z", rows);
    out << id << ": " << f.surface.rows() << " surface / " << f.volume.rows() << " volume points\n";
  }
}

/// Drag and lift coefficients from predicted and reference surface fields.
inline void cmd_coeffs(const RunConfig& cfg, std::ostream& out = std::cout) {
  detail::require_output(cfg);
  const auto m = detail::load_model(cfg);
  const auto ds = detail::open_dataset(cfg);
  const auto& c = ds.constants();
  auto ec = detail::eval_config(cfg);
  ec.head = eval::HeadMode::kDirect;  // surface fields only
  std::vector<std::string> rows;
  std::vector<double> cd_pred, cd_ref, cl_pred, cl_ref;
  for (const auto& id : ds.manifest().ids(detail::split_or(cfg, "test"))) {
    const auto s = ds.load(id);
    require(s.has_surface_geometry(), "coeffs: sample " + id + " has no surface normals / areas");
    const auto p = eval::make_predictor(*m.net, m.ck->stats, s, cfg.mode, ec.grid_resolution, cfg.seed);
    const Matrix<double> pred =
        data::surface_physical(p.predict(model::Branch::kSurface, eval::positions(s.surface_pos), ec.chunk, ec.threads),
                               m.ck->stats);
    physics::SurfacePatchSet ps, rs;
    for (Index i = 0; i < s.surface_pos.rows; ++i) {
      const Vec3 n = s.surface_normal.vec3(i).normalized();
      const double a = s.surface_area(i, 0);
      ps.normals.push_back(n);
      rs.normals.push_back(n);
      ps.areas.push_back(a);
      rs.areas.push_back(a);
      ps.pressure.push_back(pred(i, 0));
      ps.shear.emplace_back(pred(i, 1), pred(i, 2), pred(i, 3));
      rs.pressure.push_back(s.surface_p(i, 0));
      rs.shear.push_back(s.surface_tau.vec3(i));
    }
    auto coeff = [&](const physics::SurfacePatchSet& set) {
      return physics::drag_lift_coefficients(physics::surface_force(set, c.p_inf), c.flow_direction,
                                             c.lift_direction, c.density, c.velocity, c.reference_area);
    };
    const auto cp = coeff(ps), cr = coeff(rs);
    cd_pred.push_back(cp.drag);
    cl_pred.push_back(cp.lift);
    cd_ref.push_back(cr.drag);
    cl_ref.push_back(cr.lift);
    rows.push_back(id + "," + detail::fmt(cp.drag) + "," + detail::fmt(cp.lift) + "," + detail::fmt(cr.drag) + "," +
                   detail::fmt(cr.lift));
  }
  detail::write_lines(cfg.output / "coefficients.csv", "sample,cd_pred,cl_pred,cd_ref,cl_ref", rows);
  out << rows.size() << " samples\n";
  auto r2 = [&](const char* name, const std::vector<double>& p, const std::vector<double>& r) {
    try {
      out << "R^2 " << name << " " << detail::fmt(eval::r_squared(p, r)) << "\n";
    } catch (const InvalidArgument&) {
      out << "R^2 " << name << " undefined (fewer than two samples or constant reference)\n";
    }
  };
  r2("C_d", cd_pred, cd_ref);
  r2("C_l", cl_pred, cl_ref);
}

/// Full-mesh metrics over the split with repeated anchor draws.
inline void cmd_eval(const RunConfig& cfg, std::ostream& out = std::cout) {
  detail::require_output(cfg);
  const auto m = detail::load_model(cfg);
  const auto ds = detail::open_dataset(cfg);
  const auto ec = detail::eval_config(cfg);
  std::vector<eval::MetricReport> reports;
  std::vector<std::string> rows;
  for (const auto& id : ds.manifest().ids(detail::split_or(cfg, "test"))) {
    const auto s = ds.load(id);
    for (auto& r : eval::evaluate_repeats(*m.net, m.ck->stats, s, ec, cfg.seed)) {
      for (auto& line : eval::report_csv_rows(r)) rows.push_back(std::move(line));
      reports.push_back(std::move(r));
    }
  }
  require(!reports.empty(), "eval: the split is empty");
  detail::write_lines(cfg.output / "metrics.csv", eval::report_csv_header(), rows);
  const std::string text = eval::summary_text(eval::summarize(reports), static_cast<Index>(reports.size()));
  io::write_file(cfg.output / "summary.txt", text);
  out << text;
}

/// Runtime / memory scaling rows. The chunked mode uses the checkpoint when
/// given, otherwise a freshly initialized model on a synthetic sample.
inline void cmd_bench(const RunConfig& cfg, std::ostream& out = std::cout) {
  detail::require_output(cfg);
  cfg.bench.validate();
  const bool chunked = std::find(cfg.bench.modes.begin(), cfg.bench.modes.end(), "chunked") != cfg.bench.modes.end();
  std::vector<eval::BenchRow> rows;
  if (chunked) {
    model::Checkpoint ck;
    if (!cfg.checkpoint.empty()) {
      ck = model::load_checkpoint(detail::resolve_checkpoint(cfg.checkpoint, "ema"));
    } else {
      ck.config = cfg.model;
      ck.weights = model::init_weights<float>(cfg.model, cfg.seed);
    }
    data::SyntheticConfig sc;
    sc.geometry_points = ck.config.supernodes * 2;
    sc.surface_points = ck.config.surface_anchors;
    sc.volume_points = ck.config.volume_anchors;
    const auto s = data::generate_synthetic(sc, cfg.seed, "bench");
    if (cfg.checkpoint.empty()) ck.stats = data::fit_normalization(std::span(&s, 1));
    const model::AbUpt<float> net(ck.config, ck.weights);
    const auto p = eval::make_predictor(net, ck.stats, s, data::PointsMode::kCfdMesh, 8, cfg.seed);
    rows = eval::bench_scaling(cfg.bench, &p, cfg.seed);
  } else {
    rows = eval::bench_scaling(cfg.bench, nullptr, cfg.seed);
  }
  std::vector<std::string> lines;
  for (const auto& r : rows) lines.push_back(eval::bench_csv_row(r));
  detail::write_lines(cfg.output / "bench.csv", eval::bench_csv_header(), lines);
  std::ostringstream summary;
  for (const auto& mode : cfg.bench.modes) {
    summary << mode << " time exponent " << detail::fmt(eval::mode_exponent(rows, mode));
    if (mode == "chunked") summary << ", peak memory growth " << detail::fmt(eval::memory_growth(rows, mode));
    summary << "\n";
  }
  io::write_file(cfg.output / "summary.txt", summary.str());
  out << summary.str();
}

inline void run(const RunConfig& cfg, std::ostream& out = std::cout) {
  if (cfg.command == "generate") return cmd_generate(cfg, out);
  if (cfg.command == "train") return cmd_train(cfg, out);
  if (cfg.command == "finetune-divfree") return cmd_finetune_divfree(cfg, out);
  if (cfg.command == "predict") return cmd_predict(cfg, out);
  if (cfg.command == "coeffs") return cmd_coeffs(cfg, out);
  if (cfg.command == "eval") return cmd_eval(cfg, out);
  if (cfg.command == "bench") return cmd_bench(cfg, out);
  throw InvalidArgument("unknown command '" + cfg.command + "'");
}

}  // namespace abupt::cli
