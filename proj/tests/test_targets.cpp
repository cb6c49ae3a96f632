#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "progmotion/targets.hpp"
#include "test_util.hpp"

using namespace progmotion;
using testutil::random_tensor;

namespace {

// (L, 1, 1) sequence from a list of values.
Tensor<double> seq(const std::vector<double>& v) { return Tensor<double>({v.size(), 1, 1}, v); }

std::vector<double> vals(const Tensor<double>& t) { return {t.values().begin(), t.values().end()}; }

// Running mean of the future part, written out per trajectory.
Tensor<double> aas_oracle(const Tensor<double>& s, std::size_t th) {
  Tensor<double> out = s;
  const std::size_t l = s.extent(0), inner = s.size() / l;
  for (std::size_t j = 0; j < inner; ++j) {
    double sum = 0.0;
    for (std::size_t i = th; i < l; ++i) {
      sum += s[i * inner + j];
      out[i * inner + j] = sum / static_cast<double>(i - th + 1);
    }
  }
  return out;
}

// Direct convolution with mirror indexing (d c b | a b c d | c b a).
std::vector<double> gaussian_oracle(const std::vector<double>& x, std::size_t window) {
  const double sigma = (window - 1) / 6.0;
  const long half = static_cast<long>(window / 2);
  std::vector<double> w;
  for (long k = -half; k <= half; ++k) w.push_back(std::exp(-0.5 * k * k / (sigma * sigma)));
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  const long n = static_cast<long>(x.size());
  auto mirror = [&](long i) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  std::vector<double> out(x.size());
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long k = -half; k <= half; ++k) acc += w[k + half] / z * x[mirror(i + k)];
    out[i] = acc;
  }
  return out;
}

double future_tv(const Tensor<double>& s, std::size_t th) {
  const std::size_t l = s.extent(0), inner = s.size() / l;
  double tv = 0.0;
  for (std::size_t i = th + 1; i < l; ++i)
    for (std::size_t j = 0; j < inner; ++j) tv += std::abs(s[i * inner + j] - s[(i - 1) * inner + j]);
  return tv;
}

double distance_to_first_future(const Tensor<double>& s, std::size_t th) {
  const std::size_t l = s.extent(0), inner = s.size() / l;
  double d = 0.0;
  for (std::size_t i = th; i < l; ++i)
    for (std::size_t j = 0; j < inner; ++j) d = std::max(d, std::abs(s[i * inner + j] - s[th * inner + j]));
  return d;
}

bool future_constant(const Tensor<double>& s, std::size_t th) { return distance_to_first_future(s, th) == 0.0; }

}  // namespace

TEST(Aas, HandExample) {
  const auto out = aas_once(seq({0, 0, 1, 3, 5}), 2);
  EXPECT_EQ(vals(out), (std::vector<double>{0, 0, 1, 2, 3}));
}

TEST(Aas, ConstantFutureIsFixedPoint) {
  const auto s = seq({4, -2, 7, 7, 7});
  EXPECT_EQ(aas_once(s, 2), s);
}

TEST(Aas, MatchesOracleAndKeepsFirstFutureFrame) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_tensor({12, 3, 2}, seed);
    const auto out = aas_once(s, 5);
    EXPECT_LE(max_abs_diff(out, aas_oracle(s, 5)), 1e-12);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(out[5 * 6 + j], s[5 * 6 + j]);
    for (std::size_t i = 0; i < 5 * 6; ++i) EXPECT_EQ(out[i], s[i]);
  }
  const auto batch = random_tensor({2, 12, 3, 2}, 99);
  const auto b = aas_once(batch, 5);
  for (std::size_t k = 0; k < 2; ++k) {
    Tensor<double> one({12, 3, 2});
    for (std::size_t i = 0; i < one.size(); ++i) one[i] = batch[k * one.size() + i];
    const auto expect = aas_oracle(one, 5);
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(b[k * one.size() + i], expect[i], 1e-12);
  }
}

TEST(Aas, RejectsBadSplit) {
  EXPECT_THROW(aas_once(seq({1, 2, 3}), 0), std::invalid_argument);
  EXPECT_THROW(aas_once(seq({1, 2, 3}), 3), std::invalid_argument);
}

TEST(Aas, Linear) {
  const auto a = random_tensor({15, 4, 3}, 1), b = random_tensor({15, 4, 3}, 2);
  const double alpha = 1.7, beta = -0.4;
  EXPECT_LE(max_abs_diff(aas_once(a * alpha + b * beta, 6), aas_once(a, 6) * alpha + aas_once(b, 6) * beta), 1e-10);
}

TEST(Aas, IdempotentExactlyOnConstantFutures) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_tensor({9, 2, 2}, 1000 + trial);
    const bool make_constant = trial % 2 == 0;
    if (make_constant)
      for (std::size_t i = 4; i < 9; ++i)
        for (std::size_t j = 0; j < 4; ++j) s[i * 4 + j] = s[4 * 4 + j];
    const auto once = aas_once(s, 4);
    EXPECT_EQ(once == s, make_constant);
    EXPECT_EQ(future_constant(s, 4), make_constant);
  }
}

TEST(BuildStageTargets, HandIteration) {
  const auto gt = seq({0, 0, 1, 3, 5});
  const auto t = build_stage_targets(gt, 2, 3);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(vals(t[2]), (std::vector<double>{0, 0, 1, 3, 5}));
  EXPECT_EQ(vals(t[1]), (std::vector<double>{0, 0, 1, 2, 3}));
  EXPECT_EQ(vals(t[0]), (std::vector<double>{0, 0, 1, 1.5, 2}));

  const auto single = build_stage_targets(gt, 2, 1);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0], gt);
  EXPECT_THROW(build_stage_targets(gt, 2, 0), std::invalid_argument);
}

TEST(BuildStageTargets, RecursiveStructureAndHistory) {
  const auto gt = random_tensor({2, 35, 4, 3}, 4);
  const auto t = build_stage_targets(gt, 10, 4);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) EXPECT_EQ(t[i], aas_once(t[i + 1], 10));
  for (const auto& s : t) EXPECT_EQ(slice_axis(s, 1, 0, 10), slice_axis(gt, 1, 0, 10));

  const auto g = build_stage_targets(gt, 10, 3, TargetSmoother{TargetSmoother::Kind::kGaussian, 5});
  EXPECT_EQ(g[1], gaussian_smooth(gt, 10, 5));
  EXPECT_EQ(g[0], gaussian_smooth(g[1], 10, 5));
}

TEST(BuildStageTargets, HundredIterationsConverge) {
  auto s = random_tensor({35, 3, 2}, 5);
  for (int n = 0; n < 100; ++n) s = aas_once(s, 10);
  EXPECT_LE(distance_to_first_future(s, 10), 1e-6);
}

TEST(Aas, MonotoneContractionAndSmoothnessOrdering) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto gt = random_tensor({20, 2, 1}, 5000 + seed);
    Tensor<double> s = gt;
    double d = distance_to_first_future(s, 8);
    for (int n = 0; n < 6; ++n) {
      const auto next = aas_once(s, 8);
      const double dn = distance_to_first_future(next, 8);
      EXPECT_LE(dn, d + 1e-12);
      EXPECT_LE(future_tv(next, 8), future_tv(s, 8) + 1e-12);
      s = next;
      d = dn;
    }
  }
}

TEST(Gaussian, KernelNormalizedAndSymmetric) {
  for (std::size_t w : {3u, 5u, 15u, 21u}) {
    const auto k = gaussian_kernel(w);
    ASSERT_EQ(k.size(), w);
    EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 0; i < w; ++i) EXPECT_DOUBLE_EQ(k[i], k[w - 1 - i]);
  }
  EXPECT_THROW(gaussian_kernel(20), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(1), std::invalid_argument);
}

TEST(Gaussian, MatchesDirectConvolution) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  for (std::size_t future : {3u, 8u, 25u}) {
    std::vector<double> x(4 + future);
    for (auto& v : x) v = n(rng);
    const auto out = vals(gaussian_smooth(seq(x), 4, 21));
    const auto expect = gaussian_oracle(std::vector<double>(x.begin() + 4, x.end()), 21);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out[i], x[i]);
    for (std::size_t i = 0; i < future; ++i) EXPECT_NEAR(out[4 + i], expect[i], 1e-12);

    const auto full = vals(gaussian_smooth(seq(x), 4, 7, SmoothScope::kFull));
    const auto expect_full = gaussian_oracle(x, 7);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(full[i], expect_full[i], 1e-12);
  }
}

TEST(Gaussian, ConstantUnchanged) {
  const auto c = seq(std::vector<double>(30, 2.5));
  EXPECT_LE(max_abs_diff(gaussian_smooth(c, 10, 21), c), 1e-12);
  EXPECT_LE(max_abs_diff(gaussian_smooth(c, 10, 21, SmoothScope::kFull), c), 1e-12);
}

TEST(Gaussian, RampJumpsAtJunctionUnlikeAas) {
  std::vector<double> ramp(35);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const auto g = vals(gaussian_smooth(seq(ramp), 10, 21));
  EXPECT_GT(std::abs(g[10] - ramp[10]), 0.1);
  EXPECT_EQ(vals(aas_once(seq(ramp), 10))[10], ramp[10]);
}

TEST(MeanX, Cases) {
  const auto fut = seq({1, 3, 5});
  EXPECT_EQ(vals(mean_x_guess(fut, 1)), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(vals(mean_x_guess(fut, 2)), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(vals(mean_x_guess(fut, 3)), (std::vector<double>{3, 3, 3}));
  EXPECT_THROW(mean_x_guess(fut, 0), std::invalid_argument);
  EXPECT_THROW(mean_x_guess(fut, 4), std::invalid_argument);

  MotionSequence obs{Tensor<float>({2, 1, 1}, {9, 8}), 25.0};
  MotionSequence future{Tensor<float>({3, 1, 1}, {1, 3, 5}), 25.0};
  const auto padded = mean_x_pad(obs, future, 2);
  EXPECT_EQ(padded.length(), 5u);
  EXPECT_EQ(padded.frames[0], 9.0f);
  EXPECT_EQ(padded.frames[1], 8.0f);
  for (std::size_t i = 2; i < 5; ++i) EXPECT_EQ(padded.frames[i], 2.0f);
}

TEST(MotionSequenceOverloads, MatchTensorVersions) {
  MotionSequence s{Tensor<float>({12, 2, 3}), 50.0};
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> u(-1, 1);
  for (auto& v : s.frames.values()) v = u(rng);
  const auto a = aas_once(s, 4);
  EXPECT_EQ(a.fps, 50.0);
  EXPECT_EQ(a.frames, aas_once(s.frames, 4));
  const auto t = build_stage_targets(s, 4, 3);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[2], s);
  EXPECT_EQ(gaussian_smooth(s, 4, 5).frames, gaussian_smooth(s.frames, 4, 5));
}
