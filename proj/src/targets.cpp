#include "progmotion/targets.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace progmotion {

namespace {

struct FrameView {
  std::size_t outer;  // batch count (1 for a single sequence)
  std::size_t frames;
  std::size_t inner;  // M·D trajectories
};

template <typename T>
FrameView frame_view(const Tensor<T>& s) {
  if (s.rank() == 3) return {1, s.extent(0), s.extent(1) * s.extent(2)};
  if (s.rank() == 4) return {s.extent(0), s.extent(1), s.extent(2) * s.extent(3)};
  throw ShapeError("expected a (L,M,D) sequence or (B,L,M,D) batch, got " + to_string(s.shape()));
}

void check_split(std::size_t observed, std::size_t frames) {
  if (observed < 1 || observed >= frames)
    throw std::invalid_argument("observed length " + std::to_string(observed) + " must lie in [1, " +
                                std::to_string(frames) + ")");
}

std::size_t reflect(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * static_cast<long>(n - 1);
  long j = i % period;
  if (j < 0) j += period;
  if (j >= static_cast<long>(n)) j = period - j;
  return static_cast<std::size_t>(j);
}

MotionSequence with_frames(const MotionSequence& like, Tensor<float> frames) {
  MotionSequence out;
  out.frames = std::move(frames);
  out.fps = like.fps;
  return out;
}

}  // namespace

template <typename T>
Tensor<T> aas_once(const Tensor<T>& s, std::size_t observed) {
  const FrameView v = frame_view(s);
  check_split(observed, v.frames);
  Tensor<T> out = s;
  // Incremental running mean: a constant future reproduces itself exactly.
  std::vector<T> mean(v.inner);
  for (std::size_t b = 0; b < v.outer; ++b) {
    std::fill(mean.begin(), mean.end(), T{0});
    for (std::size_t l = observed; l < v.frames; ++l) {
      const std::size_t row = (b * v.frames + l) * v.inner;
      const T count = static_cast<T>(l - observed + 1);
      for (std::size_t j = 0; j < v.inner; ++j) {
        mean[j] += (s[row + j] - mean[j]) / count;
        out[row + j] = mean[j];
      }
    }
  }
  return out;
}

MotionSequence aas_once(const MotionSequence& s, std::size_t observed) {
  return with_frames(s, aas_once(s.frames, observed));
}

std::vector<double> gaussian_kernel(std::size_t window) {
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("gaussian window must be odd and >= 3, got " + std::to_string(window));
  const double sigma = static_cast<double>(window - 1) / 6.0;
  const long half = static_cast<long>(window / 2);
  std::vector<double> k(window);
  double total = 0.0;
  for (long i = -half; i <= half; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = w;
    total += w;
  }
  for (auto& w : k) w /= total;
  return k;
}

template <typename T>
Tensor<T> gaussian_smooth(const Tensor<T>& s, std::size_t observed, std::size_t window, SmoothScope scope) {
  const std::vector<double> kernel = gaussian_kernel(window);
  const FrameView v = frame_view(s);
  const std::size_t begin = scope == SmoothScope::kFutureOnly ? observed : 0;
  if (scope == SmoothScope::kFutureOnly) check_split(observed, v.frames);
  const std::size_t n = v.frames - begin;
  const long half = static_cast<long>(window / 2);
  Tensor<T> out = s;
  for (std::size_t b = 0; b < v.outer; ++b)
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t dst = (b * v.frames + begin + i) * v.inner;
      for (std::size_t j = 0; j < v.inner; ++j) {
        double acc = 0.0;
        for (long k = -half; k <= half; ++k) {
          const std::size_t src = begin + reflect(static_cast<long>(i) + k, n);
          acc += kernel[static_cast<std::size_t>(k + half)] * static_cast<double>(s[(b * v.frames + src) * v.inner + j]);
        }
        out[dst + j] = static_cast<T>(acc);
      }
    }
  return out;
}

MotionSequence gaussian_smooth(const MotionSequence& s, std::size_t observed, std::size_t window, SmoothScope scope) {
  return with_frames(s, gaussian_smooth(s.frames, observed, window, scope));
}

template <typename T>
std::vector<Tensor<T>> build_stage_targets(const Tensor<T>& gt, std::size_t observed, std::size_t stages,
                                           const TargetSmoother& smoother) {
  if (stages < 1) throw std::invalid_argument("build_stage_targets: need at least one stage");
  std::vector<Tensor<T>> targets(stages);
  targets[stages - 1] = gt;
  for (std::size_t i = stages - 1; i-- > 0;) {
    targets[i] = smoother.kind == TargetSmoother::Kind::kAas
                     ? aas_once(targets[i + 1], observed)
                     : gaussian_smooth(targets[i + 1], observed, smoother.window, SmoothScope::kFutureOnly);
  }
  return targets;
}

std::vector<MotionSequence> build_stage_targets(const MotionSequence& gt, std::size_t observed, std::size_t stages,
                                                const TargetSmoother& smoother) {
  std::vector<MotionSequence> out;
  for (auto& t : build_stage_targets(gt.frames, observed, stages, smoother)) out.push_back(with_frames(gt, std::move(t)));
  return out;
}

template <typename T>
Tensor<T> mean_x_guess(const Tensor<T>& future_gt, std::size_t x) {
  const FrameView v = frame_view(future_gt);
  if (x < 1 || x > v.frames)
    throw std::invalid_argument("mean-x: x = " + std::to_string(x) + " must lie in [1, " + std::to_string(v.frames) + "]");
  Tensor<T> out(future_gt.shape());
  std::vector<double> mean(v.inner);
  for (std::size_t b = 0; b < v.outer; ++b) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t l = 0; l < x; ++l)
      for (std::size_t j = 0; j < v.inner; ++j) mean[j] += static_cast<double>(future_gt[(b * v.frames + l) * v.inner + j]);
    for (std::size_t j = 0; j < v.inner; ++j) mean[j] /= static_cast<double>(x);
    for (std::size_t l = 0; l < v.frames; ++l)
      for (std::size_t j = 0; j < v.inner; ++j) out[(b * v.frames + l) * v.inner + j] = static_cast<T>(mean[j]);
  }
  return out;
}

MotionSequence mean_x_pad(const MotionSequence& observed, const MotionSequence& future_gt, std::size_t x) {
  if (observed.frames.rank() != 3 || observed.length() == 0)
    throw std::invalid_argument("mean_x_pad: empty observation");
  return with_frames(observed, concat_axis(observed.frames, mean_x_guess(future_gt.frames, x), 0));
}

#define PROGMOTION_INSTANTIATE(T)                                                                                   \
  template Tensor<T> aas_once(const Tensor<T>&, std::size_t);                                                       \
  template Tensor<T> gaussian_smooth(const Tensor<T>&, std::size_t, std::size_t, SmoothScope);                       \
  template std::vector<Tensor<T>> build_stage_targets(const Tensor<T>&, std::size_t, std::size_t,                    \
                                                      const TargetSmoother&);                                       \
  template Tensor<T> mean_x_guess(const Tensor<T>&, std::size_t);

PROGMOTION_INSTANTIATE(float)
PROGMOTION_INSTANTIATE(double)

#undef PROGMOTION_INSTANTIATE

}  // namespace progmotion
