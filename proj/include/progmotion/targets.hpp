#pragma once

// Intermediate supervision targets: accumulated-average smoothing (AAS),
// applied recursively, plus the Gaussian-filter and Mean-x baselines.
//
// Smoothing runs independently on each of the M·D scalar trajectories.  The
// frame axis is axis 0 for a (L, M, D) sequence and axis 1 for a (B, L, M, D)
// batch.

#include <vector>

#include "progmotion/stage_network.hpp"

namespace progmotion {

/// Future frames replaced by their running mean; history untouched.
template <typename T>
Tensor<T> aas_once(const Tensor<T>& s, std::size_t observed);
MotionSequence aas_once(const MotionSequence& s, std::size_t observed);

enum class SmoothScope { kFutureOnly, kFull };

/// Normalized kernel of odd size `window`, sigma = (window - 1) / 6.
std::vector<double> gaussian_kernel(std::size_t window);

/// Gaussian filter with reflect padding at the filtered segment's ends.
template <typename T>
Tensor<T> gaussian_smooth(const Tensor<T>& s, std::size_t observed, std::size_t window,
                          SmoothScope scope = SmoothScope::kFutureOnly);
MotionSequence gaussian_smooth(const MotionSequence& s, std::size_t observed, std::size_t window,
                               SmoothScope scope = SmoothScope::kFutureOnly);

struct TargetSmoother {
  enum class Kind { kAas, kGaussian };
  Kind kind = Kind::kAas;
  std::size_t window = 21;
  bool operator==(const TargetSmoother&) const = default;
};

/// S^T = gt and S^i = smooth(S^{i+1}) for i = T-1 .. 1; returned as [S^1, ..., S^T].
template <typename T>
std::vector<Tensor<T>> build_stage_targets(const Tensor<T>& gt, std::size_t observed, std::size_t stages,
                                           const TargetSmoother& smoother = {});
std::vector<MotionSequence> build_stage_targets(const MotionSequence& gt, std::size_t observed, std::size_t stages,
                                                const TargetSmoother& smoother = {});

/// Future guess of `future_gt`'s length holding the mean of its first x frames.
template <typename T>
Tensor<T> mean_x_guess(const Tensor<T>& future_gt, std::size_t x);

/// Observation followed by the Mean-x guess.
MotionSequence mean_x_pad(const MotionSequence& observed, const MotionSequence& future_gt, std::size_t x);

}  // namespace progmotion
