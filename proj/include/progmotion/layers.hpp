#pragma once

// Differentiable building blocks of one stage network.  Every forward has a
// hand-derived backward; caches needed by a backward are filled by the forward
// when a cache pointer is passed.
//
// Forward passes take parameters by const reference.  Batch-norm running
// statistics are committed separately (batchnorm_commit), so eval-mode
// inference never writes to parameters.

#include <random>
#include <string>

#include "progmotion/tensor.hpp"

namespace progmotion {

enum class Mode { kTrain, kEval };

using Rng = std::mt19937_64;

/// A learnable buffer with its gradient and Adam moments.
template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;
  Tensor<T> v;

  Param() = default;
  explicit Param(Tensor<T> init)
      : value(std::move(init)), grad(value.shape()), m(value.shape()), v(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }
};

enum class AdjacencyInit { kUniform, kIdentityNoise };

/// One S-DGCN or T-DGCN: out = A · x · W along the graph axis.
template <typename T>
struct DenseGraphLayerParams {
  Param<T> adjacency;  // nodes × nodes
  Param<T> weight;     // in × out

  std::size_t nodes() const { return adjacency.value.extent(0); }
  std::size_t in_width() const { return weight.value.extent(0); }
  std::size_t out_width() const { return weight.value.extent(1); }
};

template <typename T>
DenseGraphLayerParams<T> make_dense_graph(std::size_t nodes, std::size_t in, std::size_t out, AdjacencyInit init,
                                          Rng& rng);

/// Xavier-uniform in × out matrix.
template <typename T>
Tensor<T> xavier_uniform(std::size_t in, std::size_t out, Rng& rng);

template <typename T>
struct DenseGraphCache {
  Tensor<T> input;      // layer input
  Tensor<T> projected;  // input · W
};

template <typename T>
struct DenseGraphGrads {
  Tensor<T> x;
  Tensor<T> adjacency;
  Tensor<T> weight;
};

template <typename T>
Tensor<T> sdgcn_forward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, DenseGraphCache<T>* cache = nullptr);
template <typename T>
DenseGraphGrads<T> sdgcn_backward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, const Tensor<T>& grad_out);

/// Temporal graph convolution: transpose frames/joints, apply A·y·W per joint, transpose back.
template <typename T>
Tensor<T> tdgcn_forward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, DenseGraphCache<T>* cache = nullptr);
template <typename T>
DenseGraphGrads<T> tdgcn_backward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, const Tensor<T>& grad_out);

// Cached variants used by the composite layers.  The cache is the one the
// matching forward filled; for T-DGCN grad_out is in (B,L,M,F) layout.
template <typename T>
DenseGraphGrads<T> sdgcn_backward_cached(const DenseGraphLayerParams<T>& p, const DenseGraphCache<T>& cache,
                                         const Tensor<T>& grad_out);
template <typename T>
DenseGraphGrads<T> tdgcn_backward_cached(const DenseGraphLayerParams<T>& p, const DenseGraphCache<T>& cache,
                                         const Tensor<T>& grad_out);

template <typename T>
void accumulate(DenseGraphLayerParams<T>& p, const DenseGraphGrads<T>& g);

// ---------------------------------------------------------------------------
// Batch normalization, per feature channel over (batch, frames, joints).

template <typename T>
struct BatchNormParams {
  Param<T> gamma;
  Param<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T eps = T(1e-5);
  T momentum = T(0.1);

  std::size_t channels() const { return gamma.value.size(); }
};

template <typename T>
BatchNormParams<T> make_batchnorm(std::size_t channels, T eps = T(1e-5), T momentum = T(0.1));

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::kEval;
  Tensor<T> xhat;
  Tensor<T> inv_std;     // per channel
  Tensor<T> batch_mean;  // per channel, train mode only
  Tensor<T> batch_var;
};

template <typename T>
struct BatchNormGrads {
  Tensor<T> x;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
Tensor<T> batchnorm_forward(const BatchNormParams<T>& p, const Tensor<T>& x, Mode mode,
                            BatchNormCache<T>* cache = nullptr);

/// running <- (1 - momentum) * running + momentum * batch, from a train-mode cache.
template <typename T>
void batchnorm_commit(BatchNormParams<T>& p, const BatchNormCache<T>& cache);

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormParams<T>& p, const BatchNormCache<T>& cache,
                                     const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------

template <typename T>
struct ActivationCache {
  Tensor<T> activated;  // tanh(x)
  Tensor<T> mask;       // scaled keep-mask; empty when dropout is inactive
};

/// tanh followed by inverted dropout in train mode.
template <typename T>
Tensor<T> tanh_dropout(const Tensor<T>& x, double rate, Mode mode, Rng* rng, ActivationCache<T>* cache = nullptr);
template <typename T>
Tensor<T> tanh_dropout_backward(const ActivationCache<T>& cache, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// 1×1 convolution over the (frames, joints) grid.

template <typename T>
struct PointwiseParams {
  Param<T> weight;  // in × out
  Param<T> bias;    // out, or empty when disabled

  bool has_bias() const { return !bias.value.empty(); }
};

template <typename T>
PointwiseParams<T> make_pointwise(std::size_t in, std::size_t out, bool bias, Rng& rng);

template <typename T>
struct PointwiseGrads {
  Tensor<T> x;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
Tensor<T> pointwise_linear(const Tensor<T>& w, const Tensor<T>& x);
template <typename T>
Tensor<T> pointwise_forward(const PointwiseParams<T>& p, const Tensor<T>& x);
template <typename T>
PointwiseGrads<T> pointwise_backward(const PointwiseParams<T>& p, const Tensor<T>& x, const Tensor<T>& grad_out);
template <typename T>
void accumulate(PointwiseParams<T>& p, const PointwiseGrads<T>& g);

// ---------------------------------------------------------------------------
// GCL: S-DGCN -> T-DGCN -> batch norm -> tanh -> dropout.

template <typename T>
struct GclParams {
  DenseGraphLayerParams<T> sdgcn;
  DenseGraphLayerParams<T> tdgcn;
  BatchNormParams<T> bn;
  double dropout_rate = 0.0;

  std::size_t in_width() const { return sdgcn.in_width(); }
  std::size_t out_width() const { return tdgcn.out_width(); }
};

struct GclShape {
  std::size_t joints;
  std::size_t frames;
  std::size_t in;
  std::size_t out;
};

template <typename T>
GclParams<T> make_gcl(const GclShape& shape, double dropout_rate, AdjacencyInit init, Rng& rng);

template <typename T>
struct GclCache {
  DenseGraphCache<T> sdgcn;
  DenseGraphCache<T> tdgcn;
  BatchNormCache<T> bn;
  ActivationCache<T> act;
};

template <typename T>
Tensor<T> gcl_forward(const GclParams<T>& p, const Tensor<T>& x, Mode mode, Rng* rng, GclCache<T>* cache = nullptr);
/// Accumulates parameter gradients into p and returns the input gradient.
template <typename T>
Tensor<T> gcl_backward(GclParams<T>& p, const GclCache<T>& cache, const Tensor<T>& grad_out);
template <typename T>
void gcl_commit(GclParams<T>& p, const GclCache<T>& cache);

// GCB: x + GCL2(GCL1(x)) at constant width.

template <typename T>
struct GcbParams {
  GclParams<T> first;
  GclParams<T> second;
};

template <typename T>
GcbParams<T> make_gcb(std::size_t joints, std::size_t frames, std::size_t width, double dropout_rate,
                      AdjacencyInit init, Rng& rng);

template <typename T>
struct GcbCache {
  GclCache<T> first;
  GclCache<T> second;
};

template <typename T>
Tensor<T> gcb_forward(const GcbParams<T>& p, const Tensor<T>& x, Mode mode, Rng* rng, GcbCache<T>* cache = nullptr);
template <typename T>
Tensor<T> gcb_backward(GcbParams<T>& p, const GcbCache<T>& cache, const Tensor<T>& grad_out);
template <typename T>
void gcb_commit(GcbParams<T>& p, const GcbCache<T>& cache);

// Parameter traversal in a fixed order.  `f(name, Param<T>&)` for learnables,
// `g(name, Tensor<T>&)` for non-learned state (batch-norm running statistics).

template <typename T, typename F>
void for_each_param(DenseGraphLayerParams<T>& p, const std::string& prefix, F&& f) {
  f(prefix + ".adjacency", p.adjacency);
  f(prefix + ".weight", p.weight);
}

template <typename T, typename F>
void for_each_param(PointwiseParams<T>& p, const std::string& prefix, F&& f) {
  f(prefix + ".weight", p.weight);
  if (p.has_bias()) f(prefix + ".bias", p.bias);
}

template <typename T, typename F>
void for_each_param(GclParams<T>& p, const std::string& prefix, F&& f) {
  for_each_param(p.sdgcn, prefix + ".sdgcn", f);
  for_each_param(p.tdgcn, prefix + ".tdgcn", f);
  f(prefix + ".bn.gamma", p.bn.gamma);
  f(prefix + ".bn.beta", p.bn.beta);
}

template <typename T, typename F>
void for_each_param(GcbParams<T>& p, const std::string& prefix, F&& f) {
  for_each_param(p.first, prefix + ".gcl0", f);
  for_each_param(p.second, prefix + ".gcl1", f);
}

template <typename T, typename G>
void for_each_state(GclParams<T>& p, const std::string& prefix, G&& g) {
  g(prefix + ".bn.running_mean", p.bn.running_mean);
  g(prefix + ".bn.running_var", p.bn.running_var);
}

template <typename T, typename G>
void for_each_state(GcbParams<T>& p, const std::string& prefix, G&& g) {
  for_each_state(p.first, prefix + ".gcl0", g);
  for_each_state(p.second, prefix + ".gcl1", g);
}

}  // namespace progmotion
