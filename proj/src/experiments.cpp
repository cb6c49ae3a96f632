#include "progmotion/experiments.hpp"

#include <algorithm>
#include <iomanip>
#include <stdexcept>

namespace progmotion {

const std::vector<std::string> kExperiments = {"stages", "supervision", "copy", "targets", "padding"};

SplitData make_split_data(const DataProtocol& protocol, const ModelConfig& model) {
  protocol.synth.validate();
  const std::vector<MotionSequence> seqs =
      synth_motion(protocol.seed, protocol.sequences, protocol.length, model.joints, model.dims, protocol.synth);
  const std::vector<Split> splits = assign_splits(seqs.size(), protocol.seed);
  SplitData out;
  for (WindowedDataset* d : {&out.train, &out.val, &out.test}) {
    d->observed = model.observed;
    d->future = model.future;
    d->joints = model.joints;
    d->dims = model.dims;
    d->fps = protocol.synth.fps;
  }
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    WindowedDataset w = sliding_windows(seqs[i], model.observed, model.future, protocol.stride, i);
    WindowedDataset& into = splits[i] == Split::kTrain ? out.train : (splits[i] == Split::kVal ? out.val : out.test);
    append_windows(into, w);
  }
  return out;
}

std::vector<Variant> ablation_variants(const std::string& experiment, const ModelConfig& model,
                                       const TrainConfig& train) {
  std::vector<Variant> out;
  auto add = [&](std::string name, ModelConfig m, TrainConfig t, bool baseline) {
    out.push_back({std::move(name), m, t, baseline});
  };
  if (experiment == "stages") {
    for (std::size_t stages = 1; stages <= 6; ++stages) {
      ModelConfig m = model;
      m.stages = stages;
      m.gcb_budget = 12;
      add("T=" + std::to_string(stages), m, train, stages == 4);
    }
  } else if (experiment == "supervision") {
    for (Supervision s : {Supervision::kAas, Supervision::kGroundTruth, Supervision::kFinalOnly}) {
      TrainConfig t = train;
      t.supervision = s;
      add(to_string(s), model, t, s == Supervision::kAas);
    }
  } else if (experiment == "copy") {
    struct Row {
      const char* name;
      std::size_t count;
      CopyAxis axis;
    };
    for (const Row& r : {Row{"temporal-1", 1, CopyAxis::kTemporal}, Row{"none", 0, CopyAxis::kTemporal},
                         Row{"temporal-3", 3, CopyAxis::kTemporal}, Row{"spatial-1", 1, CopyAxis::kSpatial},
                         Row{"channel-1", 1, CopyAxis::kChannel}}) {
      ModelConfig m = model;
      m.copy_count = r.count;
      m.copy_axis = r.axis;
      add(r.name, m, train, r.count == 1 && r.axis == CopyAxis::kTemporal);
    }
  } else if (experiment == "targets") {
    TrainConfig t = train;
    t.supervision = Supervision::kAas;
    t.smoother = {TargetSmoother::Kind::kAas, 21};
    add("aas", model, t, true);
    for (std::size_t w : {15, 21}) {
      t.smoother = {TargetSmoother::Kind::kGaussian, w};
      add("gaussian-" + std::to_string(w), model, t, false);
    }
  } else if (experiment == "padding") {
    ModelConfig m = model;
    m.stages = 1;
    TrainConfig t = train;
    t.padding = Padding::kLastPose;
    add("last-pose", m, t, true);
    std::vector<std::size_t> xs;
    if (model.future > 5) xs.push_back(5);
    xs.push_back(model.future);
    for (std::size_t x : xs) {
      t.padding = Padding::kMeanX;
      t.padding_x = x;
      add("mean-" + std::to_string(x), m, t, false);
    }
  } else {
    std::string known;
    for (const auto& e : kExperiments) known += (known.empty() ? "" : ", ") + e;
    throw std::invalid_argument("unknown experiment '" + experiment + "' (expected one of " + known + ")");
  }
  for (const auto& v : out) {
    v.model.validate();
    v.train.validate();
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

VariantResult run_variant(const Variant& variant, const SplitData& data, std::size_t seeds, const EvalSpec& spec,
                          const ProgressFn& progress) {
  if (seeds == 0) throw std::invalid_argument("run_variant: need at least one seed");
  if (data.test.empty()) throw DataError(DataErrorKind::kShapeMismatch, "run_variant: empty test split");
  VariantResult r;
  r.name = variant.name;
  r.baseline = variant.baseline;
  for (std::size_t i = 0; i < seeds; ++i) {
    TrainConfig t = variant.train;
    t.seed = variant.train.seed + i;
    ModelParams<float> model = make_model<float>(variant.model, t.seed);
    AdamState state;
    train(model, state, data.train, t);
    SeedRun run{t.seed, evaluate(model, data.test, t, spec).back()};
    if (progress) progress(variant.name, t.seed, run.test.average);
    r.runs.push_back(std::move(run));
  }
  const std::size_t h = r.runs.front().test.errors.size();
  for (std::size_t k = 0; k < h; ++k) {
    std::vector<double> col;
    for (const auto& run : r.runs) col.push_back(run.test.errors[k]);
    r.median_errors.push_back(median(col));
  }
  std::vector<double> avg;
  for (const auto& run : r.runs) avg.push_back(run.test.average);
  r.median_average = median(avg);
  return r;
}

ExperimentResult run_experiment(const std::string& experiment, const std::vector<Variant>& variants,
                                const SplitData& data, std::size_t seeds, const EvalSpec& spec,
                                const ProgressFn& progress) {
  ExperimentResult out;
  out.experiment = experiment;
  out.horizons_ms = spec.horizons_ms;
  out.metric = spec.metric;
  for (const auto& v : variants) out.variants.push_back(run_variant(v, data, seeds, spec, progress));
  return out;
}

void write_experiment_csv(std::ostream& os, const ExperimentResult& result) {
  os << "variant,baseline,seeds";
  for (double h : result.horizons_ms) os << ',' << to_string(result.metric) << '_' << h << "ms";
  os << ",mean_all_frames\n" << std::setprecision(10);
  for (const auto& v : result.variants) {
    os << v.name << ',' << (v.baseline ? 1 : 0) << ',' << v.runs.size();
    for (double e : v.median_errors) os << ',' << e;
    os << ',' << v.median_average << '\n';
  }
}

}  // namespace progmotion
