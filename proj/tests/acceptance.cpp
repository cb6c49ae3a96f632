// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                          run every criterion
//   acceptance --only 4,5               run a subset
//   acceptance --baseline-file PATH     reuse (or create) the shared 4-stage AAS seed runs
//   acceptance --write-baseline PATH    compute the shared seed runs and exit

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <unistd.h>

#include "progmotion/checkpoint.hpp"
#include "progmotion/config.hpp"
#include "progmotion/experiments.hpp"

using namespace progmotion;

namespace {

constexpr std::size_t kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

Tensor<double> normal_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

double dot(const Tensor<double>& w, const Tensor<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
  return s;
}

// ---------------------------------------------------------------------------
// 1. gradients

GradientProbe probe(const std::string& type, Tensor<double>& value, const Tensor<double>& analytic) {
  return {type, type, value.data(), analytic.data(), value.size()};
}

template <typename P>
void add_param_probes(P& p, const std::string& type, std::vector<GradientProbe>& probes) {
  for_each_param(p, type, [&](const std::string& name, Param<double>& q) {
    probes.push_back({name, name, q.value.data(), q.grad.data(), q.value.size()});
  });
}

template <typename P>
void zero_grads(P& p) {
  for_each_param(p, "", [](const std::string&, Param<double>& q) { q.zero_grad(); });
}

struct GradTally {
  double worst = 0.0;
  std::string worst_name;
  bool passed = true;
  std::string failure;
  std::set<std::string> types;

  void add(const std::string& type, const GradientReport& r) {
    types.insert(type);
    if (!r.passed) {
      passed = false;
      if (failure.empty()) failure = type + ": " + (r.failure.empty() ? "tolerance exceeded" : r.failure);
    }
    for (const auto& l : r.layers)
      if (l.max_rel_error >= worst) {
        worst = l.max_rel_error;
        worst_name = type + "/" + l.worst;
      }
  }
};

GradientCheckOptions layer_options() {
  GradientCheckOptions o;
  o.samples_per_type = 100000;  // every coordinate
  o.step = 1e-5;
  o.tolerance = 1e-4;
  return o;
}

Outcome criterion_gradients() {
  const auto start = std::chrono::steady_clock::now();
  const auto opt = layer_options();
  std::mt19937_64 rng(101);
  Rng init(102);
  GradTally tally;

  {
    DenseGraphLayerParams<double> p = make_dense_graph<double>(3, 2, 4, AdjacencyInit::kUniform, init);
    auto x = normal_tensor({2, 5, 3, 2}, rng);
    const auto w = normal_tensor({2, 5, 3, 4}, rng);
    const auto g = sdgcn_backward(p, x, w);
    auto loss = [&] { return dot(w, sdgcn_forward(p, x)); };
    tally.add("sdgcn", finite_difference_check({probe("sdgcn.x", x, g.x), probe("sdgcn.adjacency", p.adjacency.value, g.adjacency),
                                                probe("sdgcn.weight", p.weight.value, g.weight)},
                                               loss, opt));
  }
  {
    DenseGraphLayerParams<double> p = make_dense_graph<double>(5, 2, 3, AdjacencyInit::kIdentityNoise, init);
    auto x = normal_tensor({2, 5, 3, 2}, rng);
    const auto w = normal_tensor({2, 5, 3, 3}, rng);
    const auto g = tdgcn_backward(p, x, w);
    auto loss = [&] { return dot(w, tdgcn_forward(p, x)); };
    tally.add("tdgcn", finite_difference_check({probe("tdgcn.x", x, g.x), probe("tdgcn.adjacency", p.adjacency.value, g.adjacency),
                                                probe("tdgcn.weight", p.weight.value, g.weight)},
                                               loss, opt));
  }
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    auto p = make_batchnorm<double>(3);
    p.gamma.value = normal_tensor({3}, rng);
    p.beta.value = normal_tensor({3}, rng);
    p.running_mean = normal_tensor({3}, rng, 0.2);
    p.running_var = Tensor<double>({3}, {0.5, 1.5, 2.0});
    auto x = normal_tensor({3, 4, 2, 3}, rng, 2.0);
    const auto w = normal_tensor(x.shape(), rng);
    BatchNormCache<double> cache;
    batchnorm_forward(p, x, mode, &cache);
    const auto g = batchnorm_backward(p, cache, w);
    auto loss = [&] { return dot(w, batchnorm_forward(p, x, mode)); };
    const std::string type = mode == Mode::kTrain ? "batchnorm(train)" : "batchnorm(eval)";
    tally.add(type, finite_difference_check({probe(type + ".x", x, g.x), probe(type + ".gamma", p.gamma.value, g.gamma),
                                             probe(type + ".beta", p.beta.value, g.beta)},
                                            loss, opt));
  }
  {
    auto x = normal_tensor({2, 3, 2, 3}, rng);
    const auto w = normal_tensor(x.shape(), rng);
    ActivationCache<double> cache;
    Rng r(103);
    tanh_dropout(x, 0.3, Mode::kTrain, &r, &cache);
    const auto g = tanh_dropout_backward(cache, w);
    auto loss = [&] {
      Rng again(103);
      return dot(w, tanh_dropout(x, 0.3, Mode::kTrain, &again));
    };
    tally.add("tanh-dropout", finite_difference_check({probe("tanh-dropout.x", x, g)}, loss, opt));
  }
  {
    auto p = make_pointwise<double>(3, 4, true, init);
    p.bias.value = normal_tensor({4}, rng);
    auto x = normal_tensor({2, 3, 4, 3}, rng);
    const auto w = normal_tensor({2, 3, 4, 4}, rng);
    const auto g = pointwise_backward(p, x, w);
    auto loss = [&] { return dot(w, pointwise_forward(p, x)); };
    tally.add("pointwise", finite_difference_check({probe("pointwise.x", x, g.x), probe("pointwise.weight", p.weight.value, g.weight),
                                                    probe("pointwise.bias", p.bias.value, g.bias)},
                                                   loss, opt));
  }
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    auto p = make_gcl<double>({3, 4, 2, 3}, 0.0, AdjacencyInit::kUniform, init);
    p.bn.running_mean = Tensor<double>({3}, {0.1, -0.2, 0.05});
    p.bn.running_var = Tensor<double>({3}, {0.5, 2.0, 1.5});
    auto x = normal_tensor({2, 4, 3, 2}, rng);
    const auto w = normal_tensor({2, 4, 3, 3}, rng);
    zero_grads(p);
    GclCache<double> cache;
    gcl_forward(p, x, mode, nullptr, &cache);
    const auto gx = gcl_backward(p, cache, w);
    auto loss = [&] { return dot(w, gcl_forward(p, x, mode, nullptr)); };
    const std::string type = mode == Mode::kTrain ? "gcl(train)" : "gcl(eval)";
    std::vector<GradientProbe> probes{probe(type + ".x", x, gx)};
    add_param_probes(p, type, probes);
    tally.add(type, finite_difference_check(probes, loss, opt));
  }
  {
    auto p = make_gcb<double>(3, 4, 3, 0.0, AdjacencyInit::kIdentityNoise, init);
    auto x = normal_tensor({2, 4, 3, 3}, rng);
    const auto w = normal_tensor(x.shape(), rng);
    zero_grads(p);
    GcbCache<double> cache;
    gcb_forward(p, x, Mode::kTrain, nullptr, &cache);
    const auto gx = gcb_backward(p, cache, w);
    auto loss = [&] { return dot(w, gcb_forward(p, x, Mode::kTrain, nullptr)); };
    std::vector<GradientProbe> probes{probe("gcb.x", x, gx)};
    add_param_probes(p, "gcb", probes);
    tally.add("gcb", finite_difference_check(probes, loss, opt));
  }
  {
    ModelConfig m;
    m.stages = 2;
    m.observed = 3;
    m.future = 3;
    m.joints = 3;
    m.dims = 2;
    m.features = 4;
    auto model = make_model<double>(m, 104);
    const auto seqs = synth_motion(105, 1, 20, m.joints, m.dims, SynthParams{});
    const auto data = sliding_windows(seqs[0], m.observed, m.future, 2);
    const auto batch = make_batch<double>(data, {0, 3, 6});
    GradientCheckOptions o;
    o.samples_per_type = 200;
    tally.add("model", gradient_check(model, batch, TrainConfig{}, o));
  }

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = tally.passed && tally.worst <= 1e-4 && elapsed < 120.0;
  out.detail = std::to_string(tally.types.size()) + " checks, max rel error " + fmt(tally.worst, 3) + " (" +
               tally.worst_name + "), " + fmt(elapsed, 3) + " s";
  if (!tally.failure.empty()) out.detail += "; " + tally.failure;
  return out;
}

// ---------------------------------------------------------------------------
// 2. AAS

double future_tv(const Tensor<double>& s, std::size_t observed, std::size_t md) {
  const std::size_t length = s.extent(0);
  double tv = 0.0;
  for (std::size_t t = observed + 1; t < length; ++t)
    for (std::size_t j = 0; j < md; ++j) tv += std::abs(s[t * md + j] - s[(t - 1) * md + j]);
  return tv;
}

Outcome criterion_aas() {
  const std::size_t th = 10, tf = 25, m = 3, d = 3, md = m * d, length = th + tf;
  std::mt19937_64 rng(201);
  std::vector<std::string> failures;

  std::size_t continuity_bad = 0, fixed_bad = 0;
  double linearity = 0.0, convergence = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = normal_tensor({length, m, d}, rng, 50.0);
    const auto y = aas_once(x, th);
    for (std::size_t j = 0; j < md; ++j)
      if (y[th * md + j] != x[th * md + j]) ++continuity_bad;

    auto c = x;
    for (std::size_t t = th; t < length; ++t)
      for (std::size_t j = 0; j < md; ++j) c[t * md + j] = x[th * md + j];
    if (aas_once(c, th) != c) ++fixed_bad;

    const auto x2 = normal_tensor({length, m, d}, rng, 50.0);
    const double a = 1.7, b = -0.6;
    const auto lhs = aas_once(x * a + x2 * b, th);
    const auto rhs = aas_once(x, th) * a + aas_once(x2, th) * b;
    linearity = std::max(linearity, max_abs_diff(lhs, rhs));

    auto z = x;
    for (int it = 0; it < 100; ++it) z = aas_once(z, th);
    for (std::size_t t = th; t < length; ++t)
      for (std::size_t j = 0; j < md; ++j) convergence = std::max(convergence, std::abs(z[t * md + j] - x[th * md + j]));
  }
  if (continuity_bad) failures.push_back("continuity " + std::to_string(continuity_bad));
  if (fixed_bad) failures.push_back("fixed point " + std::to_string(fixed_bad));
  if (linearity > 1e-10) failures.push_back("linearity");
  if (convergence > 1e-6) failures.push_back("convergence");

  std::size_t tv_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = normal_tensor({length, m, d}, rng, 50.0);
    const auto targets = build_stage_targets(x, th, 4);
    for (std::size_t i = 0; i + 1 < targets.size(); ++i) {
      const double lo = future_tv(targets[i], th, md), hi = future_tv(targets[i + 1], th, md);
      // Slack at the level of summation roundoff only.
      if (lo > hi * (1.0 + 1e-12)) ++tv_violations;
    }
  }
  if (tv_violations) failures.push_back("tv violations " + std::to_string(tv_violations));

  Outcome out;
  out.pass = failures.empty();
  out.detail = "linearity " + fmt(linearity, 3) + ", convergence after 100 " + fmt(convergence, 3) +
               ", tv violations " + std::to_string(tv_violations) + "/3000";
  for (const auto& f : failures) out.detail += "; failed " + f;
  return out;
}

// ---------------------------------------------------------------------------
// 3. overfit

std::filesystem::path config_dir() { return PROGMOTION_CONFIG_DIR; }

Outcome criterion_overfit() {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg;
  apply_config_file(cfg, config_dir() / "overfit.ini");
  validate(cfg);
  const auto& mc = cfg.model;
  const auto seqs = synth_motion(301, 16, mc.length(), mc.joints, mc.dims, SynthParams{});
  WindowedDataset data;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    append_windows(data, sliding_windows(seqs[i], mc.observed, mc.future, 1, i));

  auto model = make_model<float>(mc, cfg.train.seed);
  AdamState state;
  const auto log = train(model, state, data, cfg.train);
  const double first = log.step_losses.front(), last = log.step_losses.back();
  const double drop = 1.0 - last / first;

  const EvalSpec spec{default_horizons(mc.future, data.fps), Metric::kMpjpe};
  const double fit = evaluate(model, data, cfg.train, spec).back().average;
  const double zero = zero_motion_report(data, spec).average;
  const double below = 1.0 - fit / zero;
  const double elapsed = seconds_since(start);

  Outcome out;
  out.pass = data.size() == 16 && log.step_losses.size() == 2000 && drop >= 0.95 && below >= 0.80 && elapsed < 300.0;
  out.detail = std::to_string(data.size()) + " windows, " + std::to_string(log.step_losses.size()) + " steps, loss " +
               fmt(first) + " -> " + fmt(last) + " (drop " + fmt(100 * drop, 4) + "%), train MPJPE " + fmt(fit) +
               " vs zero-motion " + fmt(zero) + " (" + fmt(100 * below, 4) + "% below), " + fmt(elapsed, 3) + " s";
  return out;
}

// ---------------------------------------------------------------------------
// 4-7. seeded ablations on held-out synthetic data

ModelConfig ablation_model(std::size_t observed, std::size_t future) {
  ModelConfig m;
  m.observed = observed;
  m.future = future;
  m.joints = 5;
  m.dims = 3;
  return m;
}

TrainConfig ablation_train() {
  TrainConfig t;
  t.epochs = 15;
  return t;
}

struct Protocol {
  ModelConfig model;
  TrainConfig train = ablation_train();
  SplitData data;
  EvalSpec spec;
};

Protocol make_protocol(std::size_t observed, std::size_t future) {
  Protocol p;
  p.model = ablation_model(observed, future);
  p.data = make_split_data(DataProtocol{}, p.model);
  p.spec = {default_horizons(future, p.data.test.fps), Metric::kMpjpe};
  return p;
}

const Protocol& main_protocol() {
  static const Protocol p = make_protocol(8, 10);
  return p;
}

std::vector<double> seed_averages(const VariantResult& r) {
  std::vector<double> out;
  for (const auto& run : r.runs) out.push_back(run.test.average);
  return out;
}

std::vector<double> run_named(const Protocol& p, const std::string& experiment, const std::string& name) {
  for (const auto& v : ablation_variants(experiment, p.model, p.train))
    if (v.name == name) {
      const auto start = std::chrono::steady_clock::now();
      const auto r = run_variant(v, p.data, kSeeds, p.spec, [&](const std::string& n, std::uint64_t seed, double avg) {
        std::cout << "    " << experiment << "/" << n << " seed " << seed << ": " << fmt(avg, 6) << std::endl;
      });
      std::cout << "    " << experiment << "/" << name << " done in " << fmt(seconds_since(start), 3) << " s" << std::endl;
      return seed_averages(r);
    }
  throw std::logic_error("no variant " + name + " in " + experiment);
}

class Baseline {
 public:
  explicit Baseline(std::optional<std::filesystem::path> file) : file_(std::move(file)) {}

  const std::vector<double>& values() {
    if (!values_.empty()) return values_;
    if (file_ && read()) return values_;
    values_ = run_named(main_protocol(), "supervision", "aas");
    if (file_) write();
    return values_;
  }

  void recompute() {
    values_.clear();
    if (file_) std::filesystem::remove(*file_);
    values();
  }

 private:
  static constexpr const char* kHeader = "progmotion-aas-baseline v1";

  bool read() {
    std::ifstream in(*file_);
    std::string header;
    if (!in || !std::getline(in, header) || header != kHeader) return false;
    std::vector<double> v;
    for (double x; in >> x;) v.push_back(x);
    if (v.size() != kSeeds) return false;
    values_ = v;
    std::cout << "    reusing 4-stage aas seed runs from " << file_->string() << std::endl;
    return true;
  }

  void write() const {
    std::ofstream out(*file_);
    out << kHeader << "\n" << std::setprecision(17);
    for (double v : values_) out << v << "\n";
  }

  std::optional<std::filesystem::path> file_;
  std::vector<double> values_;
};

std::string seeds_text(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return "[" + s + "]";
}

Outcome compare(const std::string& better_name, const std::vector<double>& better, const std::string& other_name,
                const std::vector<double>& other, bool strict) {
  const double a = median(better), b = median(other);
  Outcome out;
  out.pass = strict ? a < b : a <= b;
  out.detail = better_name + " median " + fmt(a, 6) + " " + seeds_text(better) + (strict ? " < " : " <= ") + other_name +
               " median " + fmt(b, 6) + " " + seeds_text(other);
  return out;
}

Outcome criterion_multistage(Baseline& base) {
  const auto single = run_named(main_protocol(), "stages", "T=1");
  return compare("4-stage aas", base.values(), "1-stage (12 GCBs)", single, false);
}

Outcome criterion_supervision(Baseline& base) {
  const auto final_only = run_named(main_protocol(), "supervision", "none");
  // "beats" is a strict comparison.
  return compare("4-stage aas", base.values(), "final-only", final_only, true);
}

Outcome criterion_padding() {
  const Protocol p = make_protocol(10, 25);
  const auto last = run_named(p, "padding", "last-pose");
  const auto mean5 = run_named(p, "padding", "mean-5");
  const auto mean25 = run_named(p, "padding", "mean-25");
  const auto a = compare("mean-25", mean25, "last-pose", last, true);
  const auto b = compare("mean-25", mean25, "mean-5", mean5, false);
  return {a.pass && b.pass, a.detail + "; " + b.detail};
}

Outcome criterion_targets(Baseline& base) {
  const auto gaussian = run_named(main_protocol(), "targets", "gaussian-21");
  return compare("aas targets", base.values(), "gaussian-21 targets", gaussian, false);
}

// ---------------------------------------------------------------------------
// 8. determinism and persistence

RunConfig persistence_run() {
  RunConfig r;
  r.model = ablation_model(8, 10);
  r.model.stages = 2;
  r.train.max_steps = 10;
  r.train.batch_size = 8;
  return r;
}

template <typename T>
std::pair<TrainLog, std::string> seeded_run(const RunConfig& r, const WindowedDataset& data) {
  auto m = make_model<T>(r.model, r.train.seed);
  AdamState s;
  auto log = train(m, s, data, r.train);
  std::string bytes;
  if constexpr (std::is_same_v<T, float>) bytes = serialize_checkpoint(r, m, &s);
  return {std::move(log), std::move(bytes)};
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Outcome criterion_persistence() {
  const RunConfig r = persistence_run();
  const auto seqs = synth_motion(801, 4, 40, r.model.joints, r.model.dims, SynthParams{});
  WindowedDataset data;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    append_windows(data, sliding_windows(seqs[i], r.model.observed, r.model.future, 3, i));

  std::vector<std::string> failures;
  const auto f1 = seeded_run<float>(r, data), f2 = seeded_run<float>(r, data);
  const auto d1 = seeded_run<double>(r, data), d2 = seeded_run<double>(r, data);
  if (f1.first.step_losses.size() != 10 || !same_bits(f1.first.step_losses, f2.first.step_losses))
    failures.push_back("32-bit trace");
  if (d1.first.step_losses.size() != 10 || !same_bits(d1.first.step_losses, d2.first.step_losses))
    failures.push_back("64-bit trace");
  if (f1.second != f2.second) failures.push_back("checkpoint bytes");

  const auto ck = deserialize_checkpoint(f1.second);
  auto again = make_model<float>(r.model, r.train.seed);
  AdamState s;
  train(again, s, data, r.train);
  const auto a = predict_future(again, data, r.train), b = predict_future(ck.model, data, r.train);
  bool eval_same = a.size() == b.size();
  for (std::size_t i = 0; eval_same && i < a.size(); ++i)
    eval_same = a[i].shape() == b[i].shape() && std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(float)) == 0;
  const EvalSpec spec{default_horizons(r.model.future, data.fps), Metric::kMpjpe};
  const auto ra = evaluate(again, data, r.train, spec), rb = evaluate(ck.model, data, r.train, spec);
  for (std::size_t i = 0; eval_same && i < ra.size(); ++i)
    eval_same = same_bits(ra[i].errors, rb[i].errors) && same_bits({ra[i].average}, {rb[i].average});
  if (!eval_same) failures.push_back("evaluation after checkpoint round trip");

  const auto path = std::filesystem::temp_directory_path() / ("progmotion_acceptance_" + std::to_string(::getpid()) + ".seq");
  MotionSequence seq = seqs[0];
  seq.fps = 29.97;
  seq.frames[0] = -0.0f;
  seq.frames[1] = std::numeric_limits<float>::denorm_min();
  seq.frames[2] = std::numeric_limits<float>::max();
  save_sequence(seq, path);
  const auto back = load_sequence(path);
  std::filesystem::remove(path);
  const bool seq_same = back.frames.shape() == seq.frames.shape() && static_cast<float>(back.fps) == static_cast<float>(seq.fps) &&
                        std::memcmp(back.frames.data(), seq.frames.data(), seq.frames.size() * sizeof(float)) == 0;
  if (!seq_same) failures.push_back("sequence file round trip");

  Outcome out;
  out.pass = failures.empty();
  out.detail = "10-step traces (32/64-bit), " + std::to_string(f1.second.size()) +
               "-byte checkpoints, eval after reload, sequence file";
  for (const auto& f : failures) out.detail += "; failed " + f;
  return out;
}

// ---------------------------------------------------------------------------
// 9. metrics

Outcome criterion_metrics() {
  std::mt19937_64 rng(901);
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const auto gt = normal_tensor({3, 25, 4, 3}, rng, 100.0);
  check(mpjpe_at(gt, gt, 1) == 0.0 && mpjpe_at(gt, gt, 25) == 0.0, "mpjpe zero error");
  check(mae_at(gt, gt, 7) == 0.0, "mae zero error");

  Tensor<double> offset(gt.shape());
  for (std::size_t i = 0; i < offset.size(); i += 3) offset[i] = 1, offset[i + 1] = 2, offset[i + 2] = 2;
  const auto shifted = gt + offset;
  double worst = 0.0;
  for (std::size_t k = 1; k <= 25; ++k) worst = std::max(worst, std::abs(mpjpe_at(shifted, gt, k) - 3.0));
  check(worst <= 1e-10, "mpjpe (1,2,2) offset");

  Tensor<double> half(gt.shape());
  half.fill(0.5);
  check(std::abs(mae_at(gt + half, gt, 3) - 0.5) <= 1e-10, "mae constant offset");
  Tensor<double> g2({1, 1, 1, 2}), p2({1, 1, 1, 2}, {0.2, -0.4});
  check(std::abs(mae_at(p2, g2, 1) - 0.3) <= 1e-10, "mae mixed signs");

  check(horizon_to_frame(80, 25) == 2, "80 ms at 25 fps");
  check(horizon_to_frame(1000, 25) == 25, "1000 ms at 25 fps");
  check(horizon_to_frame(560, 25) == 14, "560 ms at 25 fps");
  bool threw = false;
  try {
    horizon_to_frame(90, 25);
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  check(threw, "90 ms at 25 fps rejected");

  const auto r = horizon_report(shifted, gt, {80, 160, 400, 1000}, 25, Metric::kMpjpe);
  check(r.frames == std::vector<std::size_t>{2, 4, 10, 25}, "report frames");
  bool errors_ok = std::abs(r.average - 3.0) <= 1e-10;
  for (double e : r.errors) errors_ok = errors_ok && std::abs(e - 3.0) <= 1e-10;
  check(errors_ok, "report values");

  Outcome out;
  out.pass = failures.empty();
  out.detail = "max offset error " + fmt(worst, 3);
  for (const auto& f : failures) out.detail += "; failed " + f;
  return out;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(Baseline&)> run;
};

std::vector<Criterion> criteria() {
  return {
      {1, "gradient correctness", [](Baseline&) { return criterion_gradients(); }},
      {2, "AAS operator suite", [](Baseline&) { return criterion_aas(); }},
      {3, "tiny overfit", [](Baseline&) { return criterion_overfit(); }},
      {4, "multi-stage benefit", criterion_multistage},
      {5, "intermediate supervision benefit", criterion_supervision},
      {6, "padding scheme", [](Baseline&) { return criterion_padding(); }},
      {7, "AAS vs Gaussian targets", criterion_targets},
      {8, "determinism and persistence", [](Baseline&) { return criterion_persistence(); }},
      {9, "metric suite", [](Baseline&) { return criterion_metrics(); }},
  };
}

int usage(const char* argv0) {
  std::cerr << "usage: " << argv0 << " [--only N[,N...]] [--baseline-file PATH] [--write-baseline PATH]\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::optional<std::filesystem::path> baseline_file;
  bool write_baseline = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (i + 1 >= argc) return usage(argv[0]);
    const std::string value = argv[++i];
    if (arg == "--only") {
      std::stringstream ss(value);
      for (std::string part; std::getline(ss, part, ',');) only.insert(std::stoi(part));
    } else if (arg == "--baseline-file") {
      baseline_file = value;
    } else if (arg == "--write-baseline") {
      baseline_file = value;
      write_baseline = true;
    } else {
      return usage(argv[0]);
    }
  }

  Baseline baseline(baseline_file);
  if (write_baseline) {
    try {
      baseline.recompute();
    } catch (const std::exception& e) {
      std::cerr << "baseline: " << e.what() << "\n";
      return 2;
    }
    std::cout << "wrote " << baseline_file->string() << "\n";
    return 0;
  }

  int failed = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run(baseline);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
