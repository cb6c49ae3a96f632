#include "progmotion/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace progmotion {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kPerJointNorm: return "per-joint-norm";
    case LossKind::kAbsolute: return "absolute";
    case LossKind::kSquared: return "squared";
  }
  return "per-joint-norm";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "per-joint-norm") return LossKind::kPerJointNorm;
  if (name == "absolute") return LossKind::kAbsolute;
  if (name == "squared") return LossKind::kSquared;
  throw std::invalid_argument("unknown loss '" + name + "' (expected per-joint-norm, absolute or squared)");
}

std::string to_string(Supervision s) {
  switch (s) {
    case Supervision::kAas: return "aas";
    case Supervision::kGroundTruth: return "gt";
    case Supervision::kFinalOnly: return "none";
  }
  return "aas";
}

Supervision parse_supervision(const std::string& name) {
  if (name == "aas") return Supervision::kAas;
  if (name == "gt") return Supervision::kGroundTruth;
  if (name == "none") return Supervision::kFinalOnly;
  throw std::invalid_argument("unknown supervision '" + name + "' (expected aas, gt or none)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(lr0 > 0)) fail("lr must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) fail("lr_decay must lie in (0, 1]");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) fail("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0)) fail("adam eps must be positive");
  if (smoother.kind == TargetSmoother::Kind::kGaussian && (smoother.window < 3 || smoother.window % 2 == 0))
    fail("gaussian window must be odd and >= 3");
}

// ---------------------------------------------------------------------------

template <typename T>
double stage_loss(const Tensor<T>& pred, const Tensor<T>& target, LossKind kind, Tensor<T>* grad) {
  require_same_shape(pred.shape(), target.shape(), "stage_loss");
  if (pred.empty()) throw ShapeError("stage_loss: empty prediction");
  if (grad) *grad = Tensor<T>(pred.shape());
  const std::size_t n = pred.size();
  double total = 0.0;
  if (kind == LossKind::kPerJointNorm) {
    const std::size_t d = pred.shape().back();
    const std::size_t joints = n / d;
    const double scale = 1.0 / static_cast<double>(joints);
    for (std::size_t j = 0; j < joints; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double e = static_cast<double>(pred[j * d + k]) - static_cast<double>(target[j * d + k]);
        sq += e * e;
      }
      const double norm = std::sqrt(sq);
      total += norm;
      if (grad && norm > 0)
        for (std::size_t k = 0; k < d; ++k)
          (*grad)[j * d + k] =
              static_cast<T>(scale * (static_cast<double>(pred[j * d + k]) - static_cast<double>(target[j * d + k])) / norm);
    }
    return total * scale;
  }
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    if (kind == LossKind::kAbsolute) {
      total += std::abs(e);
      if (grad) (*grad)[i] = static_cast<T>(scale * (e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0)));
    } else {
      total += e * e;
      if (grad) (*grad)[i] = static_cast<T>(scale * 2.0 * e);
    }
  }
  return total * scale;
}

template <typename T>
double multi_stage_loss(const std::vector<Tensor<T>>& preds, const std::vector<Tensor<T>>& targets, LossKind kind,
                        Supervision supervision, std::vector<Tensor<T>>* grads) {
  if (preds.size() != targets.size() || preds.empty())
    throw std::invalid_argument("multi_stage_loss: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(targets.size()) + " targets");
  if (grads) grads->assign(preds.size(), {});
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool scored = supervision != Supervision::kFinalOnly || i + 1 == preds.size();
    if (!scored) {
      if (grads) (*grads)[i] = Tensor<T>(preds[i].shape());
      continue;
    }
    total += stage_loss(preds[i], targets[i], kind, grads ? &(*grads)[i] : nullptr);
  }
  return total;
}

template <typename T>
std::vector<Tensor<T>> supervision_targets(const Tensor<T>& gt_full, std::size_t observed, std::size_t stages,
                                           const TrainConfig& cfg) {
  if (cfg.supervision == Supervision::kAas) return build_stage_targets(gt_full, observed, stages, cfg.smoother);
  return std::vector<Tensor<T>>(stages, gt_full);
}

// ---------------------------------------------------------------------------

template <typename T>
void adam_update(std::span<T> value, std::span<const T> grad, std::span<T> m, std::span<T> v, std::uint64_t t,
                 double lr, const AdamHyper& h) {
  if (grad.size() != value.size() || m.size() != value.size() || v.size() != value.size())
    throw ShapeError("adam: parameter, gradient and moment sizes differ");
  if (!(lr > 0)) throw std::invalid_argument("adam: lr must be positive");
  if (t < 1) throw std::invalid_argument("adam: step counter starts at 1");
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
  for (std::size_t i = 0; i < value.size(); ++i) {
    const T g = grad[i];
    m[i] = b1 * m[i] + (T{1} - b1) * g;
    v[i] = b2 * v[i] + (T{1} - b2) * g * g;
    const double mhat = static_cast<double>(m[i]) / c1;
    const double vhat = static_cast<double>(v[i]) / c2;
    value[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + h.eps));
  }
}

template <typename T>
void adam_step(Param<T>& p, std::uint64_t t, double lr, const AdamHyper& hyper) {
  adam_update<T>(p.value.values(), p.grad.values(), p.m.values(), p.v.values(), t, lr, hyper);
}

template <typename T>
void adam_step(ModelParams<T>& model, AdamState& state, double lr, const AdamHyper& hyper) {
  ++state.step;
  for_each_param(model, [&](const std::string&, Param<T>& p) { adam_step(p, state.step, lr, hyper); });
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(epoch));
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> initial_guess(const Batch<T>& batch, const TrainConfig& cfg) {
  if (cfg.padding == Padding::kLastPose) return {};
  const std::size_t x = cfg.padding_x == 0 ? batch.future.extent(kFrames) : cfg.padding_x;
  return mean_x_guess(batch.future, x);
}

template <typename T>
std::vector<Tensor<T>> predict_future(const ModelParams<T>& model, const WindowedDataset& data, const TrainConfig& cfg,
                                      std::size_t batch_size) {
  const ModelConfig& c = model.config;
  if (data.observed != c.observed || data.future != c.future || data.joints != c.joints || data.dims != c.dims)
    throw DataError(DataErrorKind::kShapeMismatch,
                    "dataset windows (" + std::to_string(data.observed) + "+" + std::to_string(data.future) + ", M=" +
                        std::to_string(data.joints) + ", D=" + std::to_string(data.dims) +
                        ") do not match the model configuration");
  std::vector<Tensor<T>> out(c.stages, Tensor<T>({data.size(), c.future, c.joints, c.dims}));
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    Batch<T> batch = make_batch<T>(data, idx);
    Tensor<T> guess = initial_guess(batch, cfg);
    std::vector<Tensor<T>> preds =
        multistage_forward<T>(model, batch.observed, Mode::kEval, nullptr, nullptr, guess.empty() ? nullptr : &guess);
    for (std::size_t i = 0; i < c.stages; ++i) {
      Tensor<T> fut = slice_axis(preds[i], kFrames, c.observed, c.future);
      std::copy(fut.values().begin(), fut.values().end(), out[i].data() + start * c.future * c.joints * c.dims);
    }
  }
  return out;
}

template <typename T>
std::vector<HorizonReport> evaluate(const ModelParams<T>& model, const WindowedDataset& data, const TrainConfig& cfg,
                                    const EvalSpec& spec) {
  if (data.empty()) throw DataError(DataErrorKind::kShapeMismatch, "evaluate: empty dataset");
  std::vector<Tensor<T>> preds = predict_future(model, data, cfg);
  const Tensor<T> gt = make_batch<T>(data).future;
  std::vector<HorizonReport> reports;
  for (const auto& p : preds) reports.push_back(horizon_report(p, gt, spec.horizons_ms, data.fps, spec.metric));
  return reports;
}

HorizonReport zero_motion_report(const WindowedDataset& data, const EvalSpec& spec) {
  if (data.empty()) throw DataError(DataErrorKind::kShapeMismatch, "zero_motion_report: empty dataset");
  Batch<double> batch = make_batch<double>(data);
  Tensor<double> last = slice_axis(batch.observed, kFrames, data.observed - 1, 1);
  Tensor<double> pred(batch.future.shape());
  for (std::size_t k = 0; k < data.future; ++k) assign_axis(pred, last, kFrames, k);
  return horizon_report(pred, batch.future, spec.horizons_ms, data.fps, spec.metric);
}

// ---------------------------------------------------------------------------

template <typename T>
TrainLog train(ModelParams<T>& model, AdamState& state, const WindowedDataset& data, const TrainConfig& cfg,
               const WindowedDataset* validation, const EvalSpec& spec, const TrainHooks<T>& hooks) {
  cfg.validate();
  const ModelConfig& c = model.config;
  if (data.observed != c.observed || data.future != c.future || data.joints != c.joints || data.dims != c.dims)
    throw DataError(DataErrorKind::kShapeMismatch, "training windows do not match the model configuration");
  TrainLog log;
  if (cfg.epochs == 0) return log;
  if (data.empty()) throw DataError(DataErrorKind::kShapeMismatch, "train: empty training set");

  Rng rng(cfg.seed);
  const AdamHyper hyper{cfg.beta1, cfg.beta2, cfg.adam_eps};
  std::vector<std::size_t> order(data.size());
  std::size_t steps = 0;
  bool stop = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const Batch<T> batch = make_batch<T>(data, idx);
      const Tensor<T> guess = initial_guess(batch, cfg);
      const std::vector<Tensor<T>> targets = supervision_targets(batch.full(), c.observed, c.stages, cfg);

      zero_grad(model);
      MultiStageCache<T> cache;
      const std::vector<Tensor<T>> preds = multistage_forward(model, batch.observed, Mode::kTrain, &rng, &cache,
                                                              guess.empty() ? nullptr : &guess);
      std::vector<Tensor<T>> grads;
      const double loss = multi_stage_loss(preds, targets, cfg.loss, cfg.supervision, &grads);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "non-finite training loss at epoch " << epoch << ", batch " << batches << " (step " << steps + 1 << ")";
        throw NumericalError(os.str());
      }
      multistage_backward(model, cache, grads);
      commit_running_stats(model, cache);
      adam_step(model, state, lr, hyper);

      log.step_losses.push_back(loss);
      epoch_loss += loss;
      ++batches;
      ++steps;
      if (hooks.on_step) hooks.on_step(steps, loss);
      if (cfg.max_steps != 0 && steps >= cfg.max_steps) {
        stop = true;
        break;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1));
    if (validation && !validation->empty()) {
      const HorizonReport r = evaluate(model, *validation, cfg, spec).back();
      rec.val_errors = r.errors;
      rec.val_average = r.average;
    }
    log.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec, model, state);
  }
  return log;
}

// ---------------------------------------------------------------------------

std::string layer_type_of(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  if (parts.size() < 2) return name;
  std::string type = parts[parts.size() - 2] + "." + parts.back();
  if (parts[parts.size() - 2] == "proj" && parts.size() >= 3) type = parts[parts.size() - 3] + "." + type;
  return type;
}

GradientReport finite_difference_check(const std::vector<GradientProbe>& probes, const std::function<double()>& loss,
                                       const GradientCheckOptions& options) {
  // Coordinates grouped by layer type, in first-seen order.
  std::vector<std::string> types;
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> coords;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    auto& list = coords[probes[p].layer_type];
    if (list.empty()) types.push_back(probes[p].layer_type);
    for (std::size_t i = 0; i < probes[p].size; ++i) list.emplace_back(p, i);
  }
  Rng rng(options.seed);
  const double noise =
      options.noise_factor * std::numeric_limits<double>::epsilon() * std::max(std::abs(loss()), 1.0) / options.step;
  const double denom_floor = std::max(options.abs_floor, noise / options.tolerance);
  GradientReport report;
  report.passed = true;
  for (const auto& type : types) {
    auto list = coords[type];
    if (list.size() > options.samples_per_type) {
      std::shuffle(list.begin(), list.end(), rng);
      list.resize(options.samples_per_type);
    }
    LayerTypeResult r;
    r.layer_type = type;
    for (const auto& [p, i] : list) {
      double* theta = probes[p].value + i;
      const double saved = *theta;
      const double hi = saved + options.step, lo = saved - options.step;
      *theta = hi;
      const double up = loss();
      *theta = lo;
      const double down = loss();
      *theta = saved;
      const double numeric = (up - down) / (hi - lo);
      const double analytic = probes[p].analytic[i];
      const std::string where = probes[p].name + "[" + std::to_string(i) + "]";
      if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
        report.passed = false;
        if (report.failure.empty()) report.failure = "non-finite gradient at " + where;
        r.max_rel_error = std::numeric_limits<double>::infinity();
        r.worst = where;
        ++r.checked;
        continue;
      }
      const double denom = std::max({std::abs(analytic), std::abs(numeric), denom_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > r.max_rel_error || r.worst.empty()) {
        r.max_rel_error = std::max(rel, r.max_rel_error);
        if (rel >= r.max_rel_error) r.worst = where;
      }
      ++r.checked;
    }
    if (!(r.max_rel_error <= options.tolerance)) report.passed = false;
    report.layers.push_back(r);
  }
  return report;
}

GradientReport gradient_check(ModelParams<double>& model, const Batch<double>& batch, const TrainConfig& cfg,
                              const GradientCheckOptions& options) {
  const ModelConfig& c = model.config;
  const Tensor<double> guess = initial_guess(batch, cfg);
  const Tensor<double>* guess_ptr = guess.empty() ? nullptr : &guess;
  const std::vector<Tensor<double>> targets = supervision_targets(batch.full(), c.observed, c.stages, cfg);

  zero_grad(model);
  MultiStageCache<double> cache;
  std::vector<Tensor<double>> preds = multistage_forward(model, batch.observed, Mode::kEval, nullptr, &cache, guess_ptr);
  std::vector<Tensor<double>> grads;
  multi_stage_loss(preds, targets, cfg.loss, cfg.supervision, &grads);
  multistage_backward(model, cache, grads);

  std::vector<GradientProbe> probes;
  for_each_param(model, [&](const std::string& name, Param<double>& p) {
    probes.push_back({name, layer_type_of(name), p.value.data(), p.grad.data(), p.value.size()});
  });
  auto loss = [&]() {
    return multi_stage_loss(multistage_forward<double>(model, batch.observed, Mode::kEval, nullptr, nullptr, guess_ptr), targets,
                            cfg.loss, cfg.supervision);
  };
  return finite_difference_check(probes, loss, options);
}

#define PROGMOTION_INSTANTIATE(T)                                                                                   \
  template double stage_loss(const Tensor<T>&, const Tensor<T>&, LossKind, Tensor<T>*);                             \
  template double multi_stage_loss(const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&, LossKind,           \
                                   Supervision, std::vector<Tensor<T>>*);                                           \
  template std::vector<Tensor<T>> supervision_targets(const Tensor<T>&, std::size_t, std::size_t, const TrainConfig&); \
  template void adam_update(std::span<T>, std::span<const T>, std::span<T>, std::span<T>, std::uint64_t, double,     \
                            const AdamHyper&);                                                                      \
  template void adam_step(Param<T>&, std::uint64_t, double, const AdamHyper&);                                      \
  template void adam_step(ModelParams<T>&, AdamState&, double, const AdamHyper&);                                   \
  template Tensor<T> initial_guess(const Batch<T>&, const TrainConfig&);                                            \
  template std::vector<Tensor<T>> predict_future(const ModelParams<T>&, const WindowedDataset&, const TrainConfig&,  \
                                                 std::size_t);                                                      \
  template std::vector<HorizonReport> evaluate(const ModelParams<T>&, const WindowedDataset&, const TrainConfig&,    \
                                               const EvalSpec&);                                                    \
  template TrainLog train(ModelParams<T>&, AdamState&, const WindowedDataset&, const TrainConfig&,                  \
                          const WindowedDataset*, const EvalSpec&, const TrainHooks<T>&);

PROGMOTION_INSTANTIATE(float)
PROGMOTION_INSTANTIATE(double)

#undef PROGMOTION_INSTANTIATE

}  // namespace progmotion
