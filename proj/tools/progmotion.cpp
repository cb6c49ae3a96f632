// progmotion: synthetic data, training, evaluation, prediction, smoothing
// inspection and ablation sweeps.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "progmotion/checkpoint.hpp"
#include "progmotion/experiments.hpp"

namespace fs = std::filesystem;
using namespace progmotion;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "Sectioned key=value config file");
  app->add_option("--set", f.overrides, "Override a config key: section.key=value (repeatable)");
  app->add_option("--seed", f.seed, "Seed (overrides run.seed)");
  app->add_option("--out", f.out, "Output path");
}

RunConfig resolve(const CommonFlags& f, RunConfig cfg = {}) {
  if (!f.config.empty()) apply_config_file(cfg, f.config);
  apply_overrides(cfg, f.overrides);
  if (f.seed) cfg.train.seed = *f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw DataError(DataErrorKind::kIo, "failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError(DataErrorKind::kIo, "cannot create directory " + dir.string());
}

// Sequence file or manifest; a bare sequence file counts as every split.
WindowedDataset load_data(const fs::path& path, std::optional<Split> split, const ModelConfig& m, std::size_t stride) {
  if (path.extension() == ".seq") return sliding_windows(load_sequence(path), m.observed, m.future, stride);
  if (split) return load_split(path, *split, m.observed, m.future, stride);
  WindowedDataset all;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) append_windows(all, load_split(path, s, m.observed, m.future, stride));
  return all;
}

void require_data_matches(const ModelConfig& m, const WindowedDataset& d, const std::string& what) {
  if (d.empty()) return;
  if (d.joints != m.joints || d.dims != m.dims)
    throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                          "model." + std::string(d.joints != m.joints ? "joints" : "dims") + ": checkpoint has " +
                              std::to_string(d.joints != m.joints ? m.joints : m.dims) + ", " + what + " has " +
                              std::to_string(d.joints != m.joints ? d.joints : d.dims));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  CommonFlags common;
  std::size_t n = 16;
  std::size_t joints = 5;
  std::size_t dims = 3;
  std::size_t frames = 120;
  SynthParams params;
};

int cmd_synth(const SynthFlags& f) {
  f.params.validate();
  const std::uint64_t seed = f.common.seed.value_or(1);
  const fs::path dir = f.common.out.empty() ? fs::path("data") : fs::path(f.common.out);
  ensure_dir(dir);
  const auto seqs = synth_motion(seed, f.n, f.frames, f.joints, f.dims, f.params);
  const auto splits = assign_splits(f.n, seed);
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::ostringstream name;
    name << "seq_" << std::setw(4) << std::setfill('0') << i << ".seq";
    save_sequence(seqs[i], dir / name.str());
    entries.push_back({name.str(), splits[i]});
  }
  write_manifest(dir / "manifest.csv", entries);
  std::cout << "wrote " << seqs.size() << " sequences and " << (dir / "manifest.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainFlags {
  CommonFlags common;
  std::optional<std::size_t> epochs;
  std::string data;
};

int cmd_train(const TrainFlags& f) {
  RunConfig cfg = resolve(f.common);
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (!f.data.empty()) cfg.data_manifest = f.data;
  validate(cfg);
  if (cfg.data_manifest.empty()) throw ConfigError("no training data: set data.manifest or pass --data");

  WindowedDataset train_set = load_data(cfg.data_manifest, Split::kTrain, cfg.model, cfg.data_stride);
  WindowedDataset val =
      fs::path(cfg.data_manifest).extension() == ".seq"
          ? WindowedDataset{}
          : load_split(cfg.data_manifest, Split::kVal, cfg.model.observed, cfg.model.future, cfg.data_stride);
  if (train_set.empty()) throw DataError(DataErrorKind::kShapeMismatch, "no training windows in " + cfg.data_manifest);
  if (cfg.model.joints == 0) cfg.model.joints = train_set.joints;
  if (cfg.model.dims == 0) cfg.model.dims = train_set.dims;
  if (cfg.model.joints != train_set.joints || cfg.model.dims != train_set.dims)
    throw DataError(DataErrorKind::kShapeMismatch,
                    "data has M=" + std::to_string(train_set.joints) + ", D=" + std::to_string(train_set.dims) +
                        " but model.joints=" + std::to_string(cfg.model.joints) +
                        ", model.dims=" + std::to_string(cfg.model.dims));
  cfg.model.validate();
  const EvalSpec spec{resolved_horizons(cfg, train_set.fps), cfg.metric};

  ensure_dir(cfg.out);
  ModelParams<float> model = make_model<float>(cfg.model, cfg.train.seed);
  AdamState state;

  std::ofstream log(cfg.out / "run.log", std::ios::trunc);
  if (!log) throw DataError(DataErrorKind::kIo, "cannot write " + (cfg.out / "run.log").string());
  log << "# config\n" << to_config_text(cfg) << "\n# parameters " << count_parameters(model) << '\n'
      << "# windows train=" << train_set.size() << " val=" << val.size() << '\n';

  std::ofstream metrics(cfg.out / "metrics.csv", std::ios::trunc);
  metrics << "epoch,lr,train_loss";
  for (double h : spec.horizons_ms) metrics << ",val_" << to_string(spec.metric) << '_' << h << "ms";
  metrics << ",val_mean_all_frames\n";

  double best = std::numeric_limits<double>::infinity();
  save_checkpoint(cfg.out / "last.ckpt", cfg, model, &state);
  save_checkpoint(cfg.out / "best.ckpt", cfg, model, &state);
  TrainHooks<float> hooks;
  hooks.on_epoch = [&](const EpochRecord& r, const ModelParams<float>& m, const AdamState& s) {
    metrics << r.epoch << ',' << fmt(r.lr) << ',' << fmt(r.train_loss);
    if (val.empty()) {
      metrics << std::string(spec.horizons_ms.size() + 1, ',');
    } else {
      for (double e : r.val_errors) metrics << ',' << fmt(e);
      metrics << ',' << fmt(r.val_average);
    }
    metrics << '\n' << std::flush;
    log << "epoch " << r.epoch << " lr " << fmt(r.lr) << " loss " << fmt(r.train_loss);
    if (!val.empty()) log << " val " << fmt(r.val_average);
    log << '\n' << std::flush;
    save_checkpoint(cfg.out / "last.ckpt", cfg, m, &s);
    const double score = val.empty() ? r.train_loss : r.val_average;
    if (score < best) {
      best = score;
      save_checkpoint(cfg.out / "best.ckpt", cfg, m, &s);
    }
  };
  train(model, state, train_set, cfg.train, val.empty() ? nullptr : &val, spec, hooks);
  std::cout << "trained " << state.step << " steps; checkpoints in " << cfg.out.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalFlags {
  CommonFlags common;
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string horizons;
  std::string metric;
  bool per_stage = false;
  bool gt_as_prediction = false;
};

std::vector<double> parse_horizons(const std::string& text) {
  RunConfig tmp;
  apply_setting(tmp, "eval.horizons", text);
  return tmp.horizons_ms;
}

int cmd_eval(const EvalFlags& f) {
  const Checkpoint ck = load_checkpoint(f.checkpoint);
  CommonFlags common = f.common;
  common.out.clear();
  RunConfig req = resolve(common, ck.config);
  require_compatible(ck.config.model, req.model, "the eval request");
  if (!f.horizons.empty()) req.horizons_ms = parse_horizons(f.horizons);
  if (!f.metric.empty()) req.metric = parse_metric(f.metric);
  const std::string data_path = f.data.empty() ? req.data_manifest : f.data;
  if (data_path.empty()) throw ConfigError("no evaluation data: pass --data");
  std::optional<Split> split;
  if (f.split != "all") split = parse_split(f.split);
  const WindowedDataset data = load_data(data_path, split, ck.model.config, req.data_stride);
  if (data.empty()) throw DataError(DataErrorKind::kShapeMismatch, "no evaluation windows in " + data_path);
  require_data_matches(ck.model.config, data, "the data");
  const EvalSpec spec{resolved_horizons(req, data.fps), req.metric};

  std::vector<HorizonReport> reports;
  if (f.gt_as_prediction) {
    const Batch<float> b = make_batch<float>(data);
    reports.assign(ck.model.config.stages, horizon_report(b.future, b.future, spec.horizons_ms, data.fps, spec.metric));
  } else {
    reports = evaluate(ck.model, data, req.train, spec);
  }

  std::ostringstream os;
  os << std::setprecision(10);
  if (f.per_stage) {
    os << "stage,horizon_ms,value\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t k = 0; k < reports[i].errors.size(); ++k)
        os << i + 1 << ',' << reports[i].horizons_ms[k] << ',' << reports[i].errors[k] << '\n';
      os << i + 1 << ",mean_all_frames," << reports[i].average << '\n';
    }
  } else {
    write_report_csv(os, reports.back());
  }
  if (f.common.out.empty())
    std::cout << os.str();
  else
    write_text(f.common.out, os.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PredictFlags {
  CommonFlags common;
  std::string checkpoint;
  std::string input;
  bool all_stages = false;
};

int cmd_predict(const PredictFlags& f) {
  const Checkpoint ck = load_checkpoint(f.checkpoint);
  const ModelConfig& m = ck.model.config;
  const MotionSequence seq = load_sequence(f.input);
  if (seq.length() < m.observed)
    throw DataError(DataErrorKind::kShapeMismatch, f.input + ": " + std::to_string(seq.length()) +
                                                       " frames, need at least T_h=" + std::to_string(m.observed));
  if (seq.joints() != m.joints || seq.dims() != m.dims)
    throw DataError(DataErrorKind::kShapeMismatch, f.input + ": M=" + std::to_string(seq.joints()) +
                                                       ", D=" + std::to_string(seq.dims()) + " but the checkpoint has M=" +
                                                       std::to_string(m.joints) + ", D=" + std::to_string(m.dims));
  const Tensor<float> obs = slice_axis(seq.frames, 0, 0, m.observed);
  Tensor<float> batch_obs({1, m.observed, m.joints, m.dims}, std::vector<float>(obs.values().begin(), obs.values().end()));
  Tensor<float> guess;
  if (ck.config.train.padding == Padding::kMeanX) {
    if (seq.length() < m.length())
      throw DataError(DataErrorKind::kShapeMismatch,
                      "checkpoint uses oracle mean-x padding; input must also hold the T_f ground-truth frames");
    const Tensor<float> fut = slice_axis(seq.frames, 0, m.observed, m.future);
    Tensor<float> b({1, m.future, m.joints, m.dims}, std::vector<float>(fut.values().begin(), fut.values().end()));
    guess = mean_x_guess(b, ck.config.train.padding_x == 0 ? m.future : ck.config.train.padding_x);
  }
  const auto preds = multistage_forward<float>(ck.model, batch_obs, Mode::kEval, nullptr, nullptr,
                                               guess.empty() ? nullptr : &guess);

  const fs::path out = f.common.out.empty() ? fs::path("prediction.seq") : fs::path(f.common.out);
  auto future_of = [&](const Tensor<float>& p) {
    Tensor<float> fut = slice_axis(p, kFrames, m.observed, m.future);
    return MotionSequence{Tensor<float>({m.future, m.joints, m.dims}, std::vector<float>(fut.values().begin(), fut.values().end())),
                          seq.fps};
  };
  if (f.all_stages) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      fs::path p = out;
      p.replace_filename(out.stem().string() + "_stage" + std::to_string(i + 1) + out.extension().string());
      save_sequence(future_of(preds[i]), p);
      std::cout << p.string() << '\n';
    }
  } else {
    save_sequence(future_of(preds.back()), out);
    std::cout << out.string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SmoothFlags {
  CommonFlags common;
  std::string input;
  std::string method = "aas";
  std::size_t iterations = 3;
  std::size_t window = 21;
  std::size_t x = 0;
  std::size_t observed = 10;
};

int cmd_smooth(const SmoothFlags& f) {
  const MotionSequence seq = load_sequence(f.input);
  if (f.observed >= seq.length())
    throw ConfigError("--observed " + std::to_string(f.observed) + " leaves no future frames in a " +
                      std::to_string(seq.length()) + "-frame sequence");
  std::vector<MotionSequence> levels{seq};
  if (f.method == "aas") {
    for (std::size_t i = 0; i < f.iterations; ++i) levels.push_back(aas_once(levels.back(), f.observed));
  } else if (f.method == "gaussian") {
    for (std::size_t i = 0; i < f.iterations; ++i) levels.push_back(gaussian_smooth(levels.back(), f.observed, f.window));
  } else if (f.method == "mean-x") {
    const std::size_t future = seq.length() - f.observed;
    const std::size_t x = f.x == 0 ? future : f.x;
    const Tensor<float> obs = slice_axis(seq.frames, 0, 0, f.observed);
    const Tensor<float> fut = slice_axis(seq.frames, 0, f.observed, future);
    levels.push_back(mean_x_pad(MotionSequence{obs, seq.fps}, MotionSequence{fut, seq.fps}, x));
  } else {
    throw ConfigError("unknown smoothing method '" + f.method + "' (expected aas, gaussian or mean-x)");
  }

  std::ostringstream os;
  os << std::setprecision(9) << "frame";
  for (std::size_t j = 0; j < seq.joints(); ++j)
    for (std::size_t d = 0; d < seq.dims(); ++d)
      for (std::size_t k = 0; k < levels.size(); ++k)
        os << ",j" << j << "_d" << d << (k == 0 ? std::string("_original") : "_level" + std::to_string(k));
  os << '\n';
  for (std::size_t l = 0; l < seq.length(); ++l) {
    os << l;
    for (std::size_t j = 0; j < seq.joints(); ++j)
      for (std::size_t d = 0; d < seq.dims(); ++d)
        for (const auto& lv : levels) os << ',' << lv.frames.at(l, j, d);
    os << '\n';
  }
  if (f.common.out.empty())
    std::cout << os.str();
  else
    write_text(f.common.out, os.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AblateFlags {
  CommonFlags common;
  std::string experiment;
  std::size_t seeds = 5;
  DataProtocol protocol;
};

int cmd_ablate(AblateFlags f) {
  RunConfig cfg = resolve(f.common);
  validate(cfg);
  std::vector<Variant> variants;
  SplitData data;
  if (!cfg.data_manifest.empty()) {
    for (auto [split, into] : {std::pair{Split::kTrain, &data.train}, {Split::kVal, &data.val}, {Split::kTest, &data.test}})
      *into = load_split(cfg.data_manifest, split, cfg.model.observed, cfg.model.future, cfg.data_stride);
    if (cfg.model.joints == 0) cfg.model.joints = data.train.joints;
    if (cfg.model.dims == 0) cfg.model.dims = data.train.dims;
  } else {
    if (cfg.model.joints == 0) cfg.model.joints = 5;
    if (cfg.model.dims == 0) cfg.model.dims = 3;
    f.protocol.seed = cfg.train.seed;
    data = make_split_data(f.protocol, cfg.model);
  }
  variants = ablation_variants(f.experiment, cfg.model, cfg.train);
  if (data.train.empty() || data.test.empty())
    throw DataError(DataErrorKind::kShapeMismatch, "ablation needs non-empty train and test splits");
  const EvalSpec spec{resolved_horizons(cfg, data.test.fps), cfg.metric};
  const ExperimentResult result = run_experiment(f.experiment, variants, data, f.seeds, spec,
                                                 [](const std::string& v, std::uint64_t seed, double avg) {
                                                   std::cerr << v << " seed " << seed << ": " << fmt(avg) << '\n';
                                                 });
  std::ostringstream os;
  write_experiment_csv(os, result);
  if (f.common.out.empty())
    std::cout << os.str();
  else
    write_text(f.common.out, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive multi-stage human motion prediction"};
  app.require_subcommand(1);

  SynthFlags synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic motion sequences and a split manifest");
  add_common(s, synth.common);
  s->add_option("--n", synth.n, "Number of sequences");
  s->add_option("--joints", synth.joints, "Joints per pose");
  s->add_option("--dims", synth.dims, "Coordinates per joint");
  s->add_option("--frames", synth.frames, "Frames per sequence");
  s->add_option("--components", synth.params.components, "Sinusoids per trajectory");
  s->add_option("--amp-min", synth.params.amplitude_min, "Minimum amplitude (mm)");
  s->add_option("--amp-max", synth.params.amplitude_max, "Maximum amplitude (mm)");
  s->add_option("--freq-min", synth.params.frequency_min, "Minimum frequency (Hz)");
  s->add_option("--freq-max", synth.params.frequency_max, "Maximum frequency (Hz)");
  s->add_option("--drift-max", synth.params.drift_max, "Maximum drift rate (mm/s)");
  s->add_option("--noise", synth.params.noise_sigma, "Noise sigma (mm)");
  s->add_option("--fps", synth.params.fps, "Frame rate");

  TrainFlags train_flags;
  auto* t = app.add_subcommand("train", "Train a model");
  add_common(t, train_flags.common);
  t->add_option("--epochs", train_flags.epochs, "Epochs (overrides train.epochs)");
  t->add_option("--data", train_flags.data, "Manifest or sequence file (overrides data.manifest)");

  EvalFlags eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(e, eval.common);
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", eval.data, "Manifest or sequence file");
  e->add_option("--split", eval.split, "train, val, test or all")->check(CLI::IsMember({"train", "val", "test", "all"}));
  e->add_option("--horizons", eval.horizons, "Comma-separated horizons in ms");
  e->add_option("--metric", eval.metric, "mpjpe or mae");
  e->add_flag("--per-stage", eval.per_stage, "Report every stage");
  e->add_flag("--gt-as-prediction", eval.gt_as_prediction, "Score the ground truth against itself");

  PredictFlags predict;
  auto* p = app.add_subcommand("predict", "Predict the future of an observed sequence");
  add_common(p, predict.common);
  p->add_option("--checkpoint", predict.checkpoint, "Checkpoint file")->required();
  p->add_option("--input", predict.input, "Observed sequence file")->required();
  p->add_flag("--all-stages", predict.all_stages, "Write every stage's prediction");

  SmoothFlags smooth;
  auto* sm = app.add_subcommand("smooth", "Write original and smoothed trajectories as CSV");
  add_common(sm, smooth.common);
  sm->add_option("--input", smooth.input, "Sequence file")->required();
  sm->add_option("--method", smooth.method, "aas, gaussian or mean-x");
  sm->add_option("--iterations", smooth.iterations, "Smoothing levels");
  sm->add_option("--window", smooth.window, "Gaussian window");
  sm->add_option("--x", smooth.x, "Mean-x frame count (0: all future frames)");
  sm->add_option("--observed", smooth.observed, "History frames left untouched");

  AblateFlags ablate;
  auto* a = app.add_subcommand("ablate", "Run an ablation sweep");
  add_common(a, ablate.common);
  a->add_option("experiment", ablate.experiment, "stages, supervision, copy, targets or padding")->required();
  a->add_option("--seeds", ablate.seeds, "Seeds per variant");
  a->add_option("--sequences", ablate.protocol.sequences, "Synthetic sequences when no manifest is configured");
  a->add_option("--length", ablate.protocol.length, "Synthetic sequence length");
  a->add_option("--stride", ablate.protocol.stride, "Window stride for synthetic data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (t->parsed()) return cmd_train(train_flags);
    if (e->parsed()) return cmd_eval(eval);
    if (p->parsed()) return cmd_predict(predict);
    if (sm->parsed()) return cmd_smooth(smooth);
    if (a->parsed()) return cmd_ablate(ablate);
  } catch (const NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& err) {
    std::cerr << "checkpoint error: " << err.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
