#pragma once

// Losses, Adam, the learning-rate schedule, the epoch loop, evaluation and
// finite-difference gradient checking.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "progmotion/datasets.hpp"
#include "progmotion/metrics.hpp"
#include "progmotion/stage_network.hpp"
#include "progmotion/targets.hpp"

namespace progmotion {

enum class LossKind { kPerJointNorm, kAbsolute, kSquared };
enum class Supervision { kAas, kGroundTruth, kFinalOnly };
enum class Padding { kLastPose, kMeanX };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);
std::string to_string(Supervision s);
Supervision parse_supervision(const std::string& name);

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lr0 = 0.005;
  double lr_decay = 0.96;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LossKind loss = LossKind::kPerJointNorm;
  std::uint64_t seed = 1;
  Supervision supervision = Supervision::kAas;
  // How intermediate targets are derived when supervision is kAas.
  TargetSmoother smoother;
  Padding padding = Padding::kLastPose;
  std::size_t padding_x = 0;  // Mean-x window; 0 means all future frames
  std::size_t max_steps = 0;  // 0: run every epoch to completion

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// kPerJointNorm: mean over (batch, frames, joints) of the Euclidean norm of the
/// D-vector error.  kAbsolute / kSquared: mean over every scalar of |e| / e².
/// When `grad` is given it receives dLoss/dPred.
template <typename T>
double stage_loss(const Tensor<T>& pred, const Tensor<T>& target, LossKind kind, Tensor<T>* grad = nullptr);

/// Sum of stage losses.  kFinalOnly scores only the last stage (gradients for
/// earlier stages are zero).  Targets are whatever the supervision mode built.
template <typename T>
double multi_stage_loss(const std::vector<Tensor<T>>& preds, const std::vector<Tensor<T>>& targets, LossKind kind,
                        Supervision supervision = Supervision::kAas, std::vector<Tensor<T>>* grads = nullptr);

/// Targets for every stage given the full ground-truth sequence batch.
template <typename T>
std::vector<Tensor<T>> supervision_targets(const Tensor<T>& gt_full, std::size_t observed, std::size_t stages,
                                           const TrainConfig& cfg);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update at step t (1-based).
template <typename T>
void adam_update(std::span<T> value, std::span<const T> grad, std::span<T> m, std::span<T> v, std::uint64_t t,
                 double lr, const AdamHyper& hyper);

template <typename T>
void adam_step(Param<T>& p, std::uint64_t t, double lr, const AdamHyper& hyper);

/// Advances the step counter and updates every parameter of the model.
template <typename T>
void adam_step(ModelParams<T>& model, AdamState& state, double lr, const AdamHyper& hyper);

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

// ---------------------------------------------------------------------------

/// Initial future guess for stage one, or an empty tensor for last-pose padding.
template <typename T>
Tensor<T> initial_guess(const Batch<T>& batch, const TrainConfig& cfg);

/// Eval-mode predictions of every stage over the whole dataset, in window order:
/// result[i] is stage i's future segment (N, T_f, M, D).
template <typename T>
std::vector<Tensor<T>> predict_future(const ModelParams<T>& model, const WindowedDataset& data, const TrainConfig& cfg,
                                      std::size_t batch_size = 64);

struct EvalSpec {
  std::vector<double> horizons_ms;
  Metric metric = Metric::kMpjpe;
};

/// One report per stage (final stage last).
template <typename T>
std::vector<HorizonReport> evaluate(const ModelParams<T>& model, const WindowedDataset& data, const TrainConfig& cfg,
                                    const EvalSpec& spec);

/// Zero-motion baseline: the last observed pose held for every future frame.
HorizonReport zero_motion_report(const WindowedDataset& data, const EvalSpec& spec);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean batch loss over the epoch
  std::vector<double> val_errors;  // per horizon, empty without validation data
  double val_average = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
};

template <typename T>
struct TrainHooks {
  std::function<void(std::size_t step, double loss)> on_step;
  std::function<void(const EpochRecord&, const ModelParams<T>&, const AdamState&)> on_epoch;
};

/// Runs cfg.epochs epochs (or stops after cfg.max_steps optimizer steps).
template <typename T>
TrainLog train(ModelParams<T>& model, AdamState& state, const WindowedDataset& data, const TrainConfig& cfg,
               const WindowedDataset* validation = nullptr, const EvalSpec& spec = {},
               const TrainHooks<T>& hooks = {});

// ---------------------------------------------------------------------------

struct GradientProbe {
  std::string name;
  std::string layer_type;
  double* value = nullptr;
  const double* analytic = nullptr;
  std::size_t size = 0;
};

struct GradientCheckOptions {
  std::size_t samples_per_type = 200;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  // The floor is raised to noise / tolerance, with the roundoff noise of a
  // central difference taken as noise_factor · eps · max(|loss|, 1) / step, so
  // discrepancies within the noise never fail.
  double abs_floor = 1e-6;
  double noise_factor = 10.0;
  std::uint64_t seed = 7;
};

struct LayerTypeResult {
  std::string layer_type;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "<param>[<index>]"
};

struct GradientReport {
  std::vector<LayerTypeResult> layers;
  bool passed = false;
  std::string failure;  // first non-finite coordinate, if any
};

/// Central differences of `loss` against each probe's analytic buffer over a
/// random subsample of at least samples_per_type coordinates per layer type
/// (all coordinates when fewer exist).
GradientReport finite_difference_check(const std::vector<GradientProbe>& probes, const std::function<double()>& loss,
                                       const GradientCheckOptions& options);

/// Full-model check in eval mode (dropout inactive, batch norm on running statistics).
GradientReport gradient_check(ModelParams<double>& model, const Batch<double>& batch, const TrainConfig& cfg,
                              const GradientCheckOptions& options);

/// "stage0.dec.gcb1.gcl0.tdgcn.adjacency" -> "tdgcn.adjacency"; decoder output and projection layers keep their role.
std::string layer_type_of(const std::string& param_name);

}  // namespace progmotion
