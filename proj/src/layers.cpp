#include "progmotion/layers.hpp"

#include <cmath>

namespace progmotion {

namespace {

template <typename T>
Tensor<T> transpose_matrix(const Tensor<T>& a) {
  const std::size_t r = a.extent(0), c = a.extent(1);
  Tensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  return out;
}

// Σ_r a[r,:]^T b[r,:] over all rows of two tensors sharing leading extents.
template <typename T>
Tensor<T> row_outer_sum(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t fa = a.shape().back(), fb = b.shape().back();
  const std::size_t rows = fa == 0 ? 0 : a.size() / fa;
  Tensor<T> out({fa, fb});
  T* o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* ar = a.data() + r * fa;
    const T* br = b.data() + r * fb;
    for (std::size_t k = 0; k < fa; ++k) {
      const T av = ar[k];
      T* orow = o + k * fb;
      for (std::size_t j = 0; j < fb; ++j) orow[j] += av * br[j];
    }
  }
  return out;
}

template <typename T>
void check_graph_input(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, std::size_t node_axis, const char* layer,
                       const char* axis) {
  if (x.rank() != 4) throw ShapeError(std::string(layer) + ": expected a rank-4 input, got " + to_string(x.shape()));
  if (x.extent(node_axis) != p.nodes())
    throw ShapeError(std::string(layer) + ": adjacency " + to_string(p.adjacency.value.shape()) + " does not match " +
                     axis + " extent of input " + to_string(x.shape()));
  if (x.extent(3) != p.in_width())
    throw ShapeError(std::string(layer) + ": weight " + to_string(p.weight.value.shape()) +
                     " does not match feature extent of input " + to_string(x.shape()));
}

// View of a rank-4 tensor as (outer, nodes, inner) around the node axis.
struct NodeView {
  std::size_t outer, nodes, inner;
};

NodeView node_view(const Shape& s, std::size_t node_axis) {
  NodeView v{1, s[node_axis], 1};
  for (std::size_t i = 0; i < node_axis; ++i) v.outer *= s[i];
  for (std::size_t i = node_axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

// out[o,i,:] = Σ_k A[i,k] x[o,k,:], or with Aᵀ when `transposed`.
template <typename T>
Tensor<T> node_mix(const Tensor<T>& a, const Tensor<T>& x, std::size_t node_axis, bool transposed) {
  const NodeView v = node_view(x.shape(), node_axis);
  const std::size_t n = v.nodes, r = v.inner;
  Tensor<T> out(x.shape());
  const T* ap = a.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    const T* xs = x.data() + o * n * r;
    T* os = out.data() + o * n * r;
    for (std::size_t i = 0; i < n; ++i) {
      T* orow = os + i * r;
      for (std::size_t k = 0; k < n; ++k) {
        const T aik = transposed ? ap[k * n + i] : ap[i * n + k];
        const T* xrow = xs + k * r;
        for (std::size_t j = 0; j < r; ++j) orow[j] += aik * xrow[j];
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> graph_forward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, std::size_t node_axis,
                        DenseGraphCache<T>* cache) {
  Tensor<T> projected = matmul_right(x, p.weight.value);
  Tensor<T> out = node_mix(p.adjacency.value, projected, node_axis, false);
  if (cache) {
    cache->input = x;
    cache->projected = std::move(projected);
  }
  return out;
}

template <typename T>
DenseGraphGrads<T> graph_backward(const DenseGraphLayerParams<T>& p, const DenseGraphCache<T>& cache,
                                  const Tensor<T>& grad_out, std::size_t node_axis, const char* layer) {
  if (cache.input.empty() && cache.projected.empty() && !grad_out.empty())
    throw std::logic_error(std::string(layer) + ": backward called without a forward cache");
  require_same_shape(grad_out.shape(), cache.projected.shape(), layer);
  const NodeView v = node_view(grad_out.shape(), node_axis);
  const std::size_t n = v.nodes, r = v.inner;

  DenseGraphGrads<T> g;
  g.adjacency = Tensor<T>({n, n});
  T* ga = g.adjacency.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    const T* gs = grad_out.data() + o * n * r;
    const T* us = cache.projected.data() + o * n * r;
    for (std::size_t i = 0; i < n; ++i) {
      const T* grow = gs + i * r;
      for (std::size_t k = 0; k < n; ++k) {
        const T* urow = us + k * r;
        T acc = 0;
        for (std::size_t j = 0; j < r; ++j) acc += grow[j] * urow[j];
        ga[i * n + k] += acc;
      }
    }
  }
  Tensor<T> grad_projected = node_mix(p.adjacency.value, grad_out, node_axis, true);
  g.weight = row_outer_sum(cache.input, grad_projected);
  g.x = matmul_right(grad_projected, transpose_matrix(p.weight.value));
  return g;
}

}  // namespace

template <typename T>
Tensor<T> xavier_uniform(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> w({in, out});
  for (auto& v : w.values()) v = static_cast<T>(dist(rng));
  return w;
}

template <typename T>
DenseGraphLayerParams<T> make_dense_graph(std::size_t nodes, std::size_t in, std::size_t out, AdjacencyInit init,
                                          Rng& rng) {
  if (nodes == 0 || in == 0 || out == 0) throw ShapeError("dense graph layer needs non-zero nodes and widths");
  const double bound = 1.0 / std::sqrt(static_cast<double>(nodes));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> a({nodes, nodes});
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t k = 0; k < nodes; ++k) {
      const double noise = dist(rng);
      a[i * nodes + k] = static_cast<T>(init == AdjacencyInit::kUniform ? noise : (i == k ? 1.0 : 0.0) + 0.1 * noise);
    }
  DenseGraphLayerParams<T> p;
  p.adjacency = Param<T>(std::move(a));
  p.weight = Param<T>(xavier_uniform<T>(in, out, rng));
  return p;
}

template <typename T>
Tensor<T> sdgcn_forward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, DenseGraphCache<T>* cache) {
  check_graph_input(p, x, kJoints, "sdgcn", "joint");
  return graph_forward(p, x, kJoints, cache);
}

template <typename T>
DenseGraphGrads<T> sdgcn_backward_cached(const DenseGraphLayerParams<T>& p, const DenseGraphCache<T>& cache,
                                         const Tensor<T>& grad_out) {
  return graph_backward(p, cache, grad_out, kJoints, "sdgcn_backward");
}

template <typename T>
DenseGraphGrads<T> sdgcn_backward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, const Tensor<T>& grad_out) {
  DenseGraphCache<T> cache;
  sdgcn_forward(p, x, &cache);
  return sdgcn_backward_cached(p, cache, grad_out);
}

// Mixing along the frame axis directly is the same as transposing to
// (B, M, L, F), mixing per trajectory and transposing back.
template <typename T>
Tensor<T> tdgcn_forward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, DenseGraphCache<T>* cache) {
  check_graph_input(p, x, kFrames, "tdgcn", "temporal");
  return graph_forward(p, x, kFrames, cache);
}

template <typename T>
DenseGraphGrads<T> tdgcn_backward_cached(const DenseGraphLayerParams<T>& p, const DenseGraphCache<T>& cache,
                                         const Tensor<T>& grad_out) {
  if (grad_out.rank() != 4) throw ShapeError("tdgcn_backward: expected a rank-4 gradient");
  return graph_backward(p, cache, grad_out, kFrames, "tdgcn_backward");
}

template <typename T>
DenseGraphGrads<T> tdgcn_backward(const DenseGraphLayerParams<T>& p, const Tensor<T>& x, const Tensor<T>& grad_out) {
  DenseGraphCache<T> cache;
  tdgcn_forward(p, x, &cache);
  return tdgcn_backward_cached(p, cache, grad_out);
}

template <typename T>
void accumulate(DenseGraphLayerParams<T>& p, const DenseGraphGrads<T>& g) {
  p.adjacency.grad += g.adjacency;
  p.weight.grad += g.weight;
}

// ---------------------------------------------------------------------------

template <typename T>
BatchNormParams<T> make_batchnorm(std::size_t channels, T eps, T momentum) {
  if (!(eps > 0)) throw std::invalid_argument("batch norm eps must be positive");
  if (!(momentum > 0 && momentum < 1)) throw std::invalid_argument("batch norm momentum must lie in (0,1)");
  BatchNormParams<T> p;
  p.gamma = Param<T>(Tensor<T>({channels}, T{1}));
  p.beta = Param<T>(Tensor<T>({channels}, T{0}));
  p.running_mean = Tensor<T>({channels}, T{0});
  p.running_var = Tensor<T>({channels}, T{1});
  p.eps = eps;
  p.momentum = momentum;
  return p;
}

template <typename T>
Tensor<T> batchnorm_forward(const BatchNormParams<T>& p, const Tensor<T>& x, Mode mode, BatchNormCache<T>* cache) {
  const std::size_t f = p.channels();
  if (x.rank() == 0 || x.shape().back() != f)
    throw ShapeError("batchnorm: " + std::to_string(f) + " channels do not match input " + to_string(x.shape()));
  const std::size_t rows = x.size() / f;
  Tensor<T> mean({f}), var({f});
  if (mode == Mode::kTrain) {
    if (rows == 0) throw ShapeError("batchnorm: empty batch in train mode");
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < f; ++c) mean[c] += x[r * f + c];
    for (std::size_t c = 0; c < f; ++c) mean[c] /= static_cast<T>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < f; ++c) {
        const T d = x[r * f + c] - mean[c];
        var[c] += d * d;
      }
    for (std::size_t c = 0; c < f; ++c) var[c] /= static_cast<T>(rows);
  } else {
    mean = p.running_mean;
    var = p.running_var;
  }
  Tensor<T> inv_std({f});
  for (std::size_t c = 0; c < f; ++c) inv_std[c] = T{1} / std::sqrt(var[c] + p.eps);

  Tensor<T> xhat(x.shape());
  Tensor<T> out(x.shape());
  const T* gamma = p.gamma.value.data();
  const T* beta = p.beta.value.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const std::size_t i = r * f + c;
      xhat[i] = (x[i] - mean[c]) * inv_std[c];
      out[i] = gamma[c] * xhat[i] + beta[c];
    }
  if (cache) {
    cache->mode = mode;
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    if (mode == Mode::kTrain) {
      cache->batch_mean = std::move(mean);
      cache->batch_var = std::move(var);
    } else {
      cache->batch_mean = Tensor<T>();
      cache->batch_var = Tensor<T>();
    }
  }
  return out;
}

template <typename T>
void batchnorm_commit(BatchNormParams<T>& p, const BatchNormCache<T>& cache) {
  if (cache.mode != Mode::kTrain) return;
  const T keep = T{1} - p.momentum;
  for (std::size_t c = 0; c < p.channels(); ++c) {
    p.running_mean[c] = keep * p.running_mean[c] + p.momentum * cache.batch_mean[c];
    p.running_var[c] = keep * p.running_var[c] + p.momentum * cache.batch_var[c];
  }
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormParams<T>& p, const BatchNormCache<T>& cache,
                                     const Tensor<T>& grad_out) {
  if (cache.xhat.empty() || cache.inv_std.empty()) throw std::logic_error("batchnorm_backward: missing forward cache");
  require_same_shape(grad_out.shape(), cache.xhat.shape(), "batchnorm_backward");
  const std::size_t f = p.channels();
  const std::size_t rows = grad_out.size() / f;
  BatchNormGrads<T> g;
  g.gamma = Tensor<T>({f});
  g.beta = Tensor<T>({f});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const std::size_t i = r * f + c;
      g.beta[c] += grad_out[i];
      g.gamma[c] += grad_out[i] * cache.xhat[i];
    }
  g.x = Tensor<T>(grad_out.shape());
  const T* gamma = p.gamma.value.data();
  if (cache.mode == Mode::kTrain) {
    // dx = inv_std * gamma * (g - mean(g) - xhat * mean(g * xhat))
    const T n = static_cast<T>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < f; ++c) {
        const std::size_t i = r * f + c;
        g.x[i] = gamma[c] * cache.inv_std[c] * (grad_out[i] - g.beta[c] / n - cache.xhat[i] * g.gamma[c] / n);
      }
  } else {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < f; ++c) {
        const std::size_t i = r * f + c;
        g.x[i] = gamma[c] * cache.inv_std[c] * grad_out[i];
      }
  }
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> tanh_dropout(const Tensor<T>& x, double rate, Mode mode, Rng* rng, ActivationCache<T>* cache) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  Tensor<T> activated(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) activated[i] = std::tanh(x[i]);
  Tensor<T> out = activated;
  Tensor<T> mask;
  if (mode == Mode::kTrain && rate > 0.0) {
    if (!rng) throw std::invalid_argument("train-mode dropout requires a random generator");
    std::bernoulli_distribution keep(1.0 - rate);
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    mask = Tensor<T>(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask[i] = keep(*rng) ? scale : T{0};
      out[i] *= mask[i];
    }
  }
  if (cache) {
    cache->activated = std::move(activated);
    cache->mask = std::move(mask);
  }
  return out;
}

template <typename T>
Tensor<T> tanh_dropout_backward(const ActivationCache<T>& cache, const Tensor<T>& grad_out) {
  require_same_shape(grad_out.shape(), cache.activated.shape(), "tanh_dropout_backward");
  Tensor<T> g(grad_out.shape());
  const bool masked = !cache.mask.empty();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const T a = cache.activated[i];
    g[i] = grad_out[i] * (T{1} - a * a) * (masked ? cache.mask[i] : T{1});
  }
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
PointwiseParams<T> make_pointwise(std::size_t in, std::size_t out, bool bias, Rng& rng) {
  PointwiseParams<T> p;
  p.weight = Param<T>(xavier_uniform<T>(in, out, rng));
  if (bias) p.bias = Param<T>(Tensor<T>({out}));
  return p;
}

template <typename T>
Tensor<T> pointwise_linear(const Tensor<T>& w, const Tensor<T>& x) {
  return matmul_right(x, w);
}

template <typename T>
Tensor<T> pointwise_forward(const PointwiseParams<T>& p, const Tensor<T>& x) {
  Tensor<T> out = matmul_right(x, p.weight.value);
  if (p.has_bias()) {
    const std::size_t f = out.shape().back();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p.bias.value[i % f];
  }
  return out;
}

template <typename T>
PointwiseGrads<T> pointwise_backward(const PointwiseParams<T>& p, const Tensor<T>& x, const Tensor<T>& grad_out) {
  PointwiseGrads<T> g;
  g.weight = row_outer_sum(x, grad_out);
  g.x = matmul_right(grad_out, transpose_matrix(p.weight.value));
  if (p.has_bias()) {
    const std::size_t f = grad_out.shape().back();
    g.bias = Tensor<T>({f});
    for (std::size_t i = 0; i < grad_out.size(); ++i) g.bias[i % f] += grad_out[i];
  }
  return g;
}

template <typename T>
void accumulate(PointwiseParams<T>& p, const PointwiseGrads<T>& g) {
  p.weight.grad += g.weight;
  if (p.has_bias()) p.bias.grad += g.bias;
}

// ---------------------------------------------------------------------------

template <typename T>
GclParams<T> make_gcl(const GclShape& shape, double dropout_rate, AdjacencyInit init, Rng& rng) {
  GclParams<T> p;
  p.sdgcn = make_dense_graph<T>(shape.joints, shape.in, shape.out, init, rng);
  p.tdgcn = make_dense_graph<T>(shape.frames, shape.out, shape.out, init, rng);
  p.bn = make_batchnorm<T>(shape.out);
  p.dropout_rate = dropout_rate;
  return p;
}

template <typename T>
Tensor<T> gcl_forward(const GclParams<T>& p, const Tensor<T>& x, Mode mode, Rng* rng, GclCache<T>* cache) {
  if (p.sdgcn.out_width() != p.tdgcn.in_width() || p.tdgcn.out_width() != p.bn.channels())
    throw ShapeError("gcl: layer widths do not chain");
  Tensor<T> h = sdgcn_forward(p.sdgcn, x, cache ? &cache->sdgcn : nullptr);
  h = tdgcn_forward(p.tdgcn, h, cache ? &cache->tdgcn : nullptr);
  h = batchnorm_forward(p.bn, h, mode, cache ? &cache->bn : nullptr);
  return tanh_dropout(h, p.dropout_rate, mode, rng, cache ? &cache->act : nullptr);
}

template <typename T>
Tensor<T> gcl_backward(GclParams<T>& p, const GclCache<T>& cache, const Tensor<T>& grad_out) {
  Tensor<T> g = tanh_dropout_backward(cache.act, grad_out);
  BatchNormGrads<T> bn = batchnorm_backward(p.bn, cache.bn, g);
  p.bn.gamma.grad += bn.gamma;
  p.bn.beta.grad += bn.beta;
  DenseGraphGrads<T> td = tdgcn_backward_cached(p.tdgcn, cache.tdgcn, bn.x);
  accumulate(p.tdgcn, td);
  DenseGraphGrads<T> sd = sdgcn_backward_cached(p.sdgcn, cache.sdgcn, td.x);
  accumulate(p.sdgcn, sd);
  return std::move(sd.x);
}

template <typename T>
void gcl_commit(GclParams<T>& p, const GclCache<T>& cache) {
  batchnorm_commit(p.bn, cache.bn);
}

template <typename T>
GcbParams<T> make_gcb(std::size_t joints, std::size_t frames, std::size_t width, double dropout_rate,
                      AdjacencyInit init, Rng& rng) {
  GcbParams<T> p;
  p.first = make_gcl<T>({joints, frames, width, width}, dropout_rate, init, rng);
  p.second = make_gcl<T>({joints, frames, width, width}, dropout_rate, init, rng);
  return p;
}

template <typename T>
Tensor<T> gcb_forward(const GcbParams<T>& p, const Tensor<T>& x, Mode mode, Rng* rng, GcbCache<T>* cache) {
  const std::size_t width = x.rank() == 4 ? x.extent(3) : 0;
  if (p.first.in_width() != width || p.first.out_width() != width || p.second.in_width() != width ||
      p.second.out_width() != width)
    throw ShapeError("gcb: every GCL inside a residual block must keep the feature width " + std::to_string(width));
  Tensor<T> h = gcl_forward(p.first, x, mode, rng, cache ? &cache->first : nullptr);
  h = gcl_forward(p.second, h, mode, rng, cache ? &cache->second : nullptr);
  h += x;
  return h;
}

template <typename T>
Tensor<T> gcb_backward(GcbParams<T>& p, const GcbCache<T>& cache, const Tensor<T>& grad_out) {
  Tensor<T> g = gcl_backward(p.second, cache.second, grad_out);
  g = gcl_backward(p.first, cache.first, g);
  g += grad_out;
  return g;
}

template <typename T>
void gcb_commit(GcbParams<T>& p, const GcbCache<T>& cache) {
  gcl_commit(p.first, cache.first);
  gcl_commit(p.second, cache.second);
}

#define PROGMOTION_INSTANTIATE(T)                                                                                   \
  template Tensor<T> xavier_uniform<T>(std::size_t, std::size_t, Rng&);                                             \
  template DenseGraphLayerParams<T> make_dense_graph<T>(std::size_t, std::size_t, std::size_t, AdjacencyInit, Rng&); \
  template Tensor<T> sdgcn_forward(const DenseGraphLayerParams<T>&, const Tensor<T>&, DenseGraphCache<T>*);          \
  template DenseGraphGrads<T> sdgcn_backward(const DenseGraphLayerParams<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template DenseGraphGrads<T> sdgcn_backward_cached(const DenseGraphLayerParams<T>&, const DenseGraphCache<T>&,      \
                                                    const Tensor<T>&);                                              \
  template Tensor<T> tdgcn_forward(const DenseGraphLayerParams<T>&, const Tensor<T>&, DenseGraphCache<T>*);          \
  template DenseGraphGrads<T> tdgcn_backward(const DenseGraphLayerParams<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template DenseGraphGrads<T> tdgcn_backward_cached(const DenseGraphLayerParams<T>&, const DenseGraphCache<T>&,      \
                                                    const Tensor<T>&);                                              \
  template void accumulate(DenseGraphLayerParams<T>&, const DenseGraphGrads<T>&);                                   \
  template BatchNormParams<T> make_batchnorm<T>(std::size_t, T, T);                                                \
  template Tensor<T> batchnorm_forward(const BatchNormParams<T>&, const Tensor<T>&, Mode, BatchNormCache<T>*);       \
  template void batchnorm_commit(BatchNormParams<T>&, const BatchNormCache<T>&);                                    \
  template BatchNormGrads<T> batchnorm_backward(const BatchNormParams<T>&, const BatchNormCache<T>&,                \
                                                const Tensor<T>&);                                                  \
  template Tensor<T> tanh_dropout(const Tensor<T>&, double, Mode, Rng*, ActivationCache<T>*);                       \
  template Tensor<T> tanh_dropout_backward(const ActivationCache<T>&, const Tensor<T>&);                            \
  template PointwiseParams<T> make_pointwise<T>(std::size_t, std::size_t, bool, Rng&);                               \
  template Tensor<T> pointwise_linear(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> pointwise_forward(const PointwiseParams<T>&, const Tensor<T>&);                                \
  template PointwiseGrads<T> pointwise_backward(const PointwiseParams<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template void accumulate(PointwiseParams<T>&, const PointwiseGrads<T>&);                                          \
  template GclParams<T> make_gcl<T>(const GclShape&, double, AdjacencyInit, Rng&);                                  \
  template Tensor<T> gcl_forward(const GclParams<T>&, const Tensor<T>&, Mode, Rng*, GclCache<T>*);                  \
  template Tensor<T> gcl_backward(GclParams<T>&, const GclCache<T>&, const Tensor<T>&);                             \
  template void gcl_commit(GclParams<T>&, const GclCache<T>&);                                                      \
  template GcbParams<T> make_gcb<T>(std::size_t, std::size_t, std::size_t, double, AdjacencyInit, Rng&);             \
  template Tensor<T> gcb_forward(const GcbParams<T>&, const Tensor<T>&, Mode, Rng*, GcbCache<T>*);                  \
  template Tensor<T> gcb_backward(GcbParams<T>&, const GcbCache<T>&, const Tensor<T>&);                             \
  template void gcb_commit(GcbParams<T>&, const GcbCache<T>&);

PROGMOTION_INSTANTIATE(float)
PROGMOTION_INSTANTIATE(double)

#undef PROGMOTION_INSTANTIATE

}  // namespace progmotion
