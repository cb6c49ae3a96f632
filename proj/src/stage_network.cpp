#include "progmotion/stage_network.hpp"

#include <stdexcept>

namespace progmotion {

std::string to_string(CopyAxis axis) {
  switch (axis) {
    case CopyAxis::kTemporal: return "temporal";
    case CopyAxis::kSpatial: return "spatial";
    case CopyAxis::kChannel: return "channel";
  }
  return "temporal";
}

CopyAxis parse_copy_axis(const std::string& name) {
  if (name == "temporal") return CopyAxis::kTemporal;
  if (name == "spatial") return CopyAxis::kSpatial;
  if (name == "channel") return CopyAxis::kChannel;
  throw std::invalid_argument("unknown copy axis '" + name + "' (expected temporal, spatial or channel)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
  if (stages < 1) fail("stages must be >= 1");
  if (observed < 1) fail("observed must be >= 1");
  if (future < 1) fail("future must be >= 1");
  if (joints < 1) fail("joints must be >= 1");
  if (dims < 1) fail("dims must be >= 1");
  if (features < 1) fail("features must be >= 1");
  if (copy_count != 0 && copy_count != 1 && copy_count != 3) fail("copy_count must be 0, 1 or 3");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout must lie in [0, 1)");
  if (share_stage_weights && gcb_budget != 0 && gcb_budget % stages != 0)
    fail("shared stage weights need a gcb_budget divisible by stages");
}

StageLayout stage_layout(const ModelConfig& config, std::size_t stage) {
  if (config.gcb_budget == 0) return {config.encoder_gcbs, config.decoder_gcbs};
  const std::size_t base = config.gcb_budget / config.stages;
  const std::size_t extra = config.gcb_budget % config.stages;
  const std::size_t share = base + (stage < extra ? 1 : 0);
  return {share / 2, share - share / 2};
}

DecoderExtents decoder_extents(const ModelConfig& config) {
  const std::size_t factor = 1 + config.copy_count;
  DecoderExtents e{config.length(), config.joints, config.features};
  switch (config.copy_axis) {
    case CopyAxis::kTemporal: e.frames *= factor; break;
    case CopyAxis::kSpatial: e.joints *= factor; break;
    case CopyAxis::kChannel: e.features *= factor; break;
  }
  return e;
}

namespace {

std::size_t gcl_count(std::size_t joints, std::size_t frames, std::size_t in, std::size_t out) {
  return joints * joints + in * out + frames * frames + out * out + 2 * out;
}

std::size_t graph_count(std::size_t nodes, std::size_t in, std::size_t out) { return nodes * nodes + in * out; }

template <typename T>
StageParams<T> make_stage(const ModelConfig& c, const StageLayout& layout, Rng& rng) {
  const std::size_t l = c.length();
  const DecoderExtents dec = decoder_extents(c);
  StageParams<T> s;
  s.enc_in = make_gcl<T>({c.joints, l, c.dims, c.features}, c.dropout_rate, c.adjacency_init, rng);
  for (std::size_t k = 0; k < layout.encoder_gcbs; ++k)
    s.enc_gcbs.push_back(make_gcb<T>(c.joints, l, c.features, c.dropout_rate, c.adjacency_init, rng));
  s.enc_proj = make_pointwise<T>(c.dims, c.features, c.projection_bias, rng);
  for (std::size_t k = 0; k < layout.decoder_gcbs; ++k)
    s.dec_gcbs.push_back(make_gcb<T>(dec.joints, dec.frames, dec.features, c.dropout_rate, c.adjacency_init, rng));
  s.dec_out_sdgcn = make_dense_graph<T>(dec.joints, dec.features, c.dims, c.adjacency_init, rng);
  s.dec_out_tdgcn = make_dense_graph<T>(dec.frames, c.dims, c.dims, c.adjacency_init, rng);
  s.dec_proj = make_pointwise<T>(dec.features, c.dims, c.projection_bias, rng);
  return s;
}

std::size_t axis_of(CopyAxis axis) {
  switch (axis) {
    case CopyAxis::kTemporal: return kFrames;
    case CopyAxis::kSpatial: return kJoints;
    case CopyAxis::kChannel: return kFeatures;
  }
  return kFrames;
}

}  // namespace

std::size_t parameter_count(const ModelConfig& c) {
  c.validate();
  const std::size_t l = c.length();
  const DecoderExtents dec = decoder_extents(c);
  const std::size_t bias = c.projection_bias ? 1 : 0;
  const std::size_t stored = c.share_stage_weights ? 1 : c.stages;
  std::size_t total = 0;
  for (std::size_t i = 0; i < stored; ++i) {
    const StageLayout layout = stage_layout(c, i);
    total += gcl_count(c.joints, l, c.dims, c.features);
    total += layout.encoder_gcbs * 2 * gcl_count(c.joints, l, c.features, c.features);
    total += c.dims * c.features + bias * c.features;
    total += layout.decoder_gcbs * 2 * gcl_count(dec.joints, dec.frames, dec.features, dec.features);
    total += graph_count(dec.joints, dec.features, c.dims);
    total += graph_count(dec.frames, c.dims, c.dims);
    total += dec.features * c.dims + bias * c.dims;
  }
  return total;
}

template <typename T>
ModelParams<T> make_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams<T> m;
  m.config = config;
  const std::size_t stored = config.share_stage_weights ? 1 : config.stages;
  for (std::size_t i = 0; i < stored; ++i) m.stages.push_back(make_stage<T>(config, stage_layout(config, i), rng));
  return m;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> pad_with_last_pose(const Tensor<T>& observed, std::size_t future) {
  if (observed.rank() != 4 || observed.extent(kFrames) == 0)
    throw ShapeError("pad_with_last_pose: expected a non-empty (B,T_h,M,D) observation, got " +
                     to_string(observed.shape()));
  if (future < 1) throw std::invalid_argument("pad_with_last_pose: future length must be >= 1");
  const std::size_t th = observed.extent(kFrames);
  Tensor<T> last = slice_axis(observed, kFrames, th - 1, 1);
  Shape shape = observed.shape();
  shape[kFrames] = th + future;
  Tensor<T> out(shape);
  assign_axis(out, observed, kFrames, 0);
  for (std::size_t k = 0; k < future; ++k) assign_axis(out, last, kFrames, th + k);
  return out;
}

MotionSequence pad_with_last_pose(const MotionSequence& observed, std::size_t future) {
  if (observed.frames.rank() != 3 || observed.length() == 0)
    throw std::invalid_argument("pad_with_last_pose: empty observation");
  const Shape& s = observed.frames.shape();
  Tensor<float> batch({1, s[0], s[1], s[2]}, std::vector<float>(observed.frames.values().begin(),
                                                                 observed.frames.values().end()));
  Tensor<float> padded = pad_with_last_pose(batch, future);
  MotionSequence out;
  out.fps = observed.fps;
  out.frames = Tensor<float>({s[0] + future, s[1], s[2]},
                             std::vector<float>(padded.values().begin(), padded.values().end()));
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> encoder_forward(const StageParams<T>& p, const Tensor<T>& x, Mode mode, Rng* rng, EncoderCache<T>* cache) {
  if (x.rank() != 4 || x.extent(kFeatures) != p.enc_proj.weight.value.extent(0))
    throw ShapeError("encoder: input " + to_string(x.shape()) + " does not match pose width " +
                     std::to_string(p.enc_proj.weight.value.extent(0)));
  if (cache) {
    cache->x = x;
    cache->gcbs.assign(p.enc_gcbs.size(), {});
  }
  Tensor<T> h = gcl_forward(p.enc_in, x, mode, rng, cache ? &cache->in : nullptr);
  for (std::size_t k = 0; k < p.enc_gcbs.size(); ++k) h = gcb_forward(p.enc_gcbs[k], h, mode, rng, cache ? &cache->gcbs[k] : nullptr);
  h += pointwise_forward(p.enc_proj, x);
  return h;
}

template <typename T>
Tensor<T> encoder_backward(StageParams<T>& p, const EncoderCache<T>& cache, const Tensor<T>& grad_out) {
  PointwiseGrads<T> proj = pointwise_backward(p.enc_proj, cache.x, grad_out);
  accumulate(p.enc_proj, proj);
  Tensor<T> g = grad_out;
  for (std::size_t k = p.enc_gcbs.size(); k-- > 0;) g = gcb_backward(p.enc_gcbs[k], cache.gcbs[k], g);
  g = gcl_backward(p.enc_in, cache.in, g);
  g += proj.x;
  return g;
}

template <typename T>
Tensor<T> copy_features(const Tensor<T>& x, std::size_t count, CopyAxis axis) {
  if (count != 0 && count != 1 && count != 3) throw std::invalid_argument("copy_features: count must be 0, 1 or 3");
  if (x.rank() != 4) throw ShapeError("copy_features: expected rank 4, got " + to_string(x.shape()));
  const std::size_t a = axis_of(axis);
  Shape shape = x.shape();
  shape[a] *= 1 + count;
  Tensor<T> out(shape);
  for (std::size_t k = 0; k <= count; ++k) assign_axis(out, x, a, k * x.extent(a));
  return out;
}

template <typename T>
Tensor<T> copy_features_backward(const Tensor<T>& grad, std::size_t count, CopyAxis axis) {
  const std::size_t a = axis_of(axis);
  const std::size_t band = grad.extent(a) / (1 + count);
  Tensor<T> g = slice_axis(grad, a, 0, band);
  for (std::size_t k = 1; k <= count; ++k) g += slice_axis(grad, a, k * band, band);
  return g;
}

template <typename T>
Tensor<T> decoder_forward(const StageParams<T>& p, const Tensor<T>& h, Mode mode, Rng* rng, DecoderCache<T>* cache) {
  if (h.rank() != 4 || h.extent(kFeatures) != p.dec_proj.weight.value.extent(0))
    throw ShapeError("decoder: input " + to_string(h.shape()) + " does not match feature width " +
                     std::to_string(p.dec_proj.weight.value.extent(0)));
  if (cache) {
    cache->h = h;
    cache->gcbs.assign(p.dec_gcbs.size(), {});
  }
  Tensor<T> y = h;
  for (std::size_t k = 0; k < p.dec_gcbs.size(); ++k) y = gcb_forward(p.dec_gcbs[k], y, mode, rng, cache ? &cache->gcbs[k] : nullptr);
  y = sdgcn_forward(p.dec_out_sdgcn, y, cache ? &cache->out_sdgcn : nullptr);
  y = tdgcn_forward(p.dec_out_tdgcn, y, cache ? &cache->out_tdgcn : nullptr);
  y += pointwise_forward(p.dec_proj, h);
  return y;
}

template <typename T>
Tensor<T> decoder_backward(StageParams<T>& p, const DecoderCache<T>& cache, const Tensor<T>& grad_out) {
  PointwiseGrads<T> proj = pointwise_backward(p.dec_proj, cache.h, grad_out);
  accumulate(p.dec_proj, proj);
  DenseGraphGrads<T> td = tdgcn_backward_cached(p.dec_out_tdgcn, cache.out_tdgcn, grad_out);
  accumulate(p.dec_out_tdgcn, td);
  DenseGraphGrads<T> sd = sdgcn_backward_cached(p.dec_out_sdgcn, cache.out_sdgcn, td.x);
  accumulate(p.dec_out_sdgcn, sd);
  Tensor<T> g = std::move(sd.x);
  for (std::size_t k = p.dec_gcbs.size(); k-- > 0;) g = gcb_backward(p.dec_gcbs[k], cache.gcbs[k], g);
  g += proj.x;
  return g;
}

template <typename T>
Tensor<T> stage_forward(const StageParams<T>& p, const ModelConfig& config, const Tensor<T>& x, Mode mode, Rng* rng,
                        StageCache<T>* cache) {
  if (x.rank() != 4 || x.extent(kFrames) != config.length() || x.extent(kJoints) != config.joints ||
      x.extent(kFeatures) != config.dims)
    throw ShapeError("stage: input " + to_string(x.shape()) + " does not match configured (B," +
                     std::to_string(config.length()) + "," + std::to_string(config.joints) + "," +
                     std::to_string(config.dims) + ")");
  Tensor<T> h = encoder_forward(p, x, mode, rng, cache ? &cache->encoder : nullptr);
  h = copy_features(h, config.copy_count, config.copy_axis);
  Tensor<T> y = decoder_forward(p, h, mode, rng, cache ? &cache->decoder : nullptr);
  if (config.copy_count > 0) {
    if (config.copy_axis == CopyAxis::kTemporal) y = slice_axis(y, kFrames, 0, config.length());
    if (config.copy_axis == CopyAxis::kSpatial) y = slice_axis(y, kJoints, 0, config.joints);
  }
  return y;
}

template <typename T>
Tensor<T> stage_backward(StageParams<T>& p, const ModelConfig& config, const StageCache<T>& cache,
                         const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  if (config.copy_count > 0 && config.copy_axis != CopyAxis::kChannel) {
    const std::size_t a = axis_of(config.copy_axis);
    Shape shape = grad_out.shape();
    shape[a] *= 1 + config.copy_count;
    g = Tensor<T>(shape);
    assign_axis(g, grad_out, a, 0);
  }
  g = decoder_backward(p, cache.decoder, g);
  g = copy_features_backward(g, config.copy_count, config.copy_axis);
  return encoder_backward(p, cache.encoder, g);
}

// ---------------------------------------------------------------------------

template <typename T>
std::vector<Tensor<T>> multistage_forward(const ModelParams<T>& model, const Tensor<T>& observed, Mode mode, Rng* rng,
                                          MultiStageCache<T>* cache, const Tensor<T>* initial_future) {
  const ModelConfig& c = model.config;
  if (observed.rank() != 4 || observed.extent(kFrames) != c.observed || observed.extent(kJoints) != c.joints ||
      observed.extent(kFeatures) != c.dims)
    throw ShapeError("multistage: observation " + to_string(observed.shape()) + " does not match configured (B," +
                     std::to_string(c.observed) + "," + std::to_string(c.joints) + "," + std::to_string(c.dims) + ")");
  Tensor<T> input;
  if (initial_future) {
    Shape expect = observed.shape();
    expect[kFrames] = c.future;
    require_same_shape(initial_future->shape(), expect, "multistage initial guess");
    input = concat_frames(observed, *initial_future);
  } else {
    input = pad_with_last_pose(observed, c.future);
  }
  if (cache) {
    cache->inputs.clear();
    cache->stages.assign(c.stages, {});
  }
  std::vector<Tensor<T>> outputs;
  outputs.reserve(c.stages);
  for (std::size_t i = 0; i < c.stages; ++i) {
    if (i > 0) {
      input = outputs.back();
      assign_axis(input, observed, kFrames, 0);
    }
    if (cache) cache->inputs.push_back(input);
    outputs.push_back(stage_forward(model.stage(i), c, input, mode, rng, cache ? &cache->stages[i] : nullptr));
  }
  return outputs;
}

template <typename T>
void multistage_backward(ModelParams<T>& model, const MultiStageCache<T>& cache,
                         const std::vector<Tensor<T>>& grad_outputs) {
  const ModelConfig& c = model.config;
  if (grad_outputs.size() != c.stages || cache.stages.size() != c.stages)
    throw std::invalid_argument("multistage_backward: expected one gradient and cache per stage");
  Tensor<T> carried;  // gradient reaching stage i's output through stage i+1's input
  for (std::size_t i = c.stages; i-- > 0;) {
    Tensor<T> g = grad_outputs[i];
    if (!carried.empty()) {
      Tensor<T> future = slice_axis(carried, kFrames, c.observed, c.future);
      accumulate_axis(g, future, kFrames, c.observed);
    }
    carried = stage_backward(model.stage(i), c, cache.stages[i], g);
  }
}

template <typename T>
void commit_running_stats(ModelParams<T>& model, const MultiStageCache<T>& cache) {
  for (std::size_t i = 0; i < cache.stages.size(); ++i) {
    StageParams<T>& s = model.stage(i);
    const StageCache<T>& sc = cache.stages[i];
    gcl_commit(s.enc_in, sc.encoder.in);
    for (std::size_t k = 0; k < s.enc_gcbs.size(); ++k) gcb_commit(s.enc_gcbs[k], sc.encoder.gcbs[k]);
    for (std::size_t k = 0; k < s.dec_gcbs.size(); ++k) gcb_commit(s.dec_gcbs[k], sc.decoder.gcbs[k]);
  }
}

#define PROGMOTION_INSTANTIATE(T)                                                                                   \
  template ModelParams<T> make_model<T>(const ModelConfig&, std::uint64_t);                                          \
  template Tensor<T> pad_with_last_pose(const Tensor<T>&, std::size_t);                                             \
  template Tensor<T> encoder_forward(const StageParams<T>&, const Tensor<T>&, Mode, Rng*, EncoderCache<T>*);          \
  template Tensor<T> encoder_backward(StageParams<T>&, const EncoderCache<T>&, const Tensor<T>&);                    \
  template Tensor<T> copy_features(const Tensor<T>&, std::size_t, CopyAxis);                                        \
  template Tensor<T> copy_features_backward(const Tensor<T>&, std::size_t, CopyAxis);                               \
  template Tensor<T> decoder_forward(const StageParams<T>&, const Tensor<T>&, Mode, Rng*, DecoderCache<T>*);          \
  template Tensor<T> decoder_backward(StageParams<T>&, const DecoderCache<T>&, const Tensor<T>&);                    \
  template Tensor<T> stage_forward(const StageParams<T>&, const ModelConfig&, const Tensor<T>&, Mode, Rng*,          \
                                   StageCache<T>*);                                                                 \
  template Tensor<T> stage_backward(StageParams<T>&, const ModelConfig&, const StageCache<T>&, const Tensor<T>&);    \
  template std::vector<Tensor<T>> multistage_forward(const ModelParams<T>&, const Tensor<T>&, Mode, Rng*,            \
                                                     MultiStageCache<T>*, const Tensor<T>*);                        \
  template void multistage_backward(ModelParams<T>&, const MultiStageCache<T>&, const std::vector<Tensor<T>>&);      \
  template void commit_running_stats(ModelParams<T>&, const MultiStageCache<T>&);

PROGMOTION_INSTANTIATE(float)
PROGMOTION_INSTANTIATE(double)

#undef PROGMOTION_INSTANTIATE

}  // namespace progmotion
