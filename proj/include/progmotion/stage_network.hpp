#pragma once

// Encoder-Copy-Decoder stage network and the T-stage progressive predictor.
//
// Shapes: observations are (B, T_h, M, D); every stage consumes and produces a
// full-length (B, L, M, D) sequence with L = T_h + T_f.

#include <string>
#include <vector>

#include "progmotion/layers.hpp"

namespace progmotion {

enum class CopyAxis { kTemporal, kSpatial, kChannel };

std::string to_string(CopyAxis axis);
CopyAxis parse_copy_axis(const std::string& name);

struct ModelConfig {
  std::size_t stages = 4;
  std::size_t observed = 10;
  std::size_t future = 25;
  std::size_t joints = 22;
  std::size_t dims = 3;
  std::size_t features = 16;
  std::size_t encoder_gcbs = 1;
  std::size_t decoder_gcbs = 2;
  // When non-zero, this many GCBs are spread over the stages (earlier stages
  // take the remainder) and each stage splits its share encoder/decoder as
  // floor/ceil.  Zero uses encoder_gcbs/decoder_gcbs for every stage.
  std::size_t gcb_budget = 0;
  std::size_t copy_count = 1;
  CopyAxis copy_axis = CopyAxis::kTemporal;
  double dropout_rate = 0.3;
  bool share_stage_weights = false;
  AdjacencyInit adjacency_init = AdjacencyInit::kUniform;
  bool projection_bias = false;

  std::size_t length() const { return observed + future; }
  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct StageLayout {
  std::size_t encoder_gcbs = 0;
  std::size_t decoder_gcbs = 0;
};

StageLayout stage_layout(const ModelConfig& config, std::size_t stage);

/// Extents the decoder works at after the copy step.
struct DecoderExtents {
  std::size_t frames;
  std::size_t joints;
  std::size_t features;
};

DecoderExtents decoder_extents(const ModelConfig& config);

template <typename T>
struct StageParams {
  GclParams<T> enc_in;  // D -> F
  std::vector<GcbParams<T>> enc_gcbs;
  PointwiseParams<T> enc_proj;  // D -> F
  std::vector<GcbParams<T>> dec_gcbs;
  DenseGraphLayerParams<T> dec_out_sdgcn;  // F -> D
  DenseGraphLayerParams<T> dec_out_tdgcn;  // D -> D
  PointwiseParams<T> dec_proj;             // F -> D
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  // One entry per stage, or a single shared entry when share_stage_weights.
  std::vector<StageParams<T>> stages;

  StageParams<T>& stage(std::size_t i) { return stages[config.share_stage_weights ? 0 : i]; }
  const StageParams<T>& stage(std::size_t i) const { return stages[config.share_stage_weights ? 0 : i]; }
};

template <typename T>
ModelParams<T> make_model(const ModelConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------

/// A pose sequence: frames is (L, M, D), millimetres for positions.
struct MotionSequence {
  Tensor<float> frames;
  double fps = 25.0;

  std::size_t length() const { return frames.extent(0); }
  std::size_t joints() const { return frames.extent(1); }
  std::size_t dims() const { return frames.extent(2); }
  bool operator==(const MotionSequence&) const = default;
};

MotionSequence pad_with_last_pose(const MotionSequence& observed, std::size_t future);

/// Batched form: (B, T_h, M, D) -> (B, T_h + future, M, D).
template <typename T>
Tensor<T> pad_with_last_pose(const Tensor<T>& observed, std::size_t future);

// ---------------------------------------------------------------------------

template <typename T>
struct EncoderCache {
  Tensor<T> x;
  GclCache<T> in;
  std::vector<GcbCache<T>> gcbs;
};

template <typename T>
struct DecoderCache {
  Tensor<T> h;
  std::vector<GcbCache<T>> gcbs;
  DenseGraphCache<T> out_sdgcn;
  DenseGraphCache<T> out_tdgcn;
};

template <typename T>
struct StageCache {
  EncoderCache<T> encoder;
  DecoderCache<T> decoder;
};

template <typename T>
Tensor<T> encoder_forward(const StageParams<T>& p, const Tensor<T>& x, Mode mode, Rng* rng,
                          EncoderCache<T>* cache = nullptr);
template <typename T>
Tensor<T> encoder_backward(StageParams<T>& p, const EncoderCache<T>& cache, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> copy_features(const Tensor<T>& x, std::size_t count, CopyAxis axis);
/// Adjoint of copy_features: sums the gradient bands back onto the original extent.
template <typename T>
Tensor<T> copy_features_backward(const Tensor<T>& grad, std::size_t count, CopyAxis axis);

template <typename T>
Tensor<T> decoder_forward(const StageParams<T>& p, const Tensor<T>& h, Mode mode, Rng* rng,
                          DecoderCache<T>* cache = nullptr);
template <typename T>
Tensor<T> decoder_backward(StageParams<T>& p, const DecoderCache<T>& cache, const Tensor<T>& grad_out);

/// Encoder -> copy -> decoder -> keep the front L frames (front M joints for spatial copy).
template <typename T>
Tensor<T> stage_forward(const StageParams<T>& p, const ModelConfig& config, const Tensor<T>& x, Mode mode, Rng* rng,
                        StageCache<T>* cache = nullptr);
template <typename T>
Tensor<T> stage_backward(StageParams<T>& p, const ModelConfig& config, const StageCache<T>& cache,
                         const Tensor<T>& grad_out);

template <typename T>
struct MultiStageCache {
  std::vector<Tensor<T>> inputs;  // stage inputs, kept for inspection
  std::vector<StageCache<T>> stages;
};

/// Runs all stages.  Stage 1 sees the observation padded with its last pose
/// (or `initial_future`, a (B, T_f, M, D) guess, when given); stage i sees the
/// observation followed by the future frames of stage i-1.
template <typename T>
std::vector<Tensor<T>> multistage_forward(const ModelParams<T>& model, const Tensor<T>& observed, Mode mode, Rng* rng,
                                          MultiStageCache<T>* cache = nullptr,
                                          const Tensor<T>* initial_future = nullptr);

/// Accumulates parameter gradients given dLoss/dOutput for every stage.
template <typename T>
void multistage_backward(ModelParams<T>& model, const MultiStageCache<T>& cache,
                         const std::vector<Tensor<T>>& grad_outputs);

/// Applies the batch-norm running-statistic updates recorded by a train-mode forward.
template <typename T>
void commit_running_stats(ModelParams<T>& model, const MultiStageCache<T>& cache);

// ---------------------------------------------------------------------------

template <typename T, typename F>
void for_each_param(StageParams<T>& s, const std::string& prefix, F&& f) {
  for_each_param(s.enc_in, prefix + ".enc.gcl_in", f);
  for (std::size_t k = 0; k < s.enc_gcbs.size(); ++k) for_each_param(s.enc_gcbs[k], prefix + ".enc.gcb" + std::to_string(k), f);
  for_each_param(s.enc_proj, prefix + ".enc.proj", f);
  for (std::size_t k = 0; k < s.dec_gcbs.size(); ++k) for_each_param(s.dec_gcbs[k], prefix + ".dec.gcb" + std::to_string(k), f);
  for_each_param(s.dec_out_sdgcn, prefix + ".dec.out_sdgcn", f);
  for_each_param(s.dec_out_tdgcn, prefix + ".dec.out_tdgcn", f);
  for_each_param(s.dec_proj, prefix + ".dec.proj", f);
}

template <typename T, typename G>
void for_each_state(StageParams<T>& s, const std::string& prefix, G&& g) {
  for_each_state(s.enc_in, prefix + ".enc.gcl_in", g);
  for (std::size_t k = 0; k < s.enc_gcbs.size(); ++k) for_each_state(s.enc_gcbs[k], prefix + ".enc.gcb" + std::to_string(k), g);
  for (std::size_t k = 0; k < s.dec_gcbs.size(); ++k) for_each_state(s.dec_gcbs[k], prefix + ".dec.gcb" + std::to_string(k), g);
}

template <typename T, typename F>
void for_each_param(ModelParams<T>& m, F&& f) {
  for (std::size_t i = 0; i < m.stages.size(); ++i) for_each_param(m.stages[i], "stage" + std::to_string(i), f);
}

template <typename T, typename G>
void for_each_state(ModelParams<T>& m, G&& g) {
  for (std::size_t i = 0; i < m.stages.size(); ++i) for_each_state(m.stages[i], "stage" + std::to_string(i), g);
}

template <typename T>
void zero_grad(ModelParams<T>& m) {
  for_each_param(m, [](const std::string&, Param<T>& p) { p.zero_grad(); });
}

/// Learnable scalar count from the configuration alone.
std::size_t parameter_count(const ModelConfig& config);

template <typename T>
std::size_t count_parameters(ModelParams<T>& m) {
  std::size_t n = 0;
  for_each_param(m, [&](const std::string&, Param<T>& p) { n += p.value.size(); });
  return n;
}

}  // namespace progmotion
