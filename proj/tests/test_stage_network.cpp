#include <gtest/gtest.h>

#include <cmath>

#include "progmotion/stage_network.hpp"
#include "test_util.hpp"

using namespace progmotion;
using testutil::dot;
using testutil::max_rel_error;
using testutil::numeric_gradient;
using testutil::random_tensor;

namespace {

ModelConfig small_config(std::size_t stages = 2) {
  ModelConfig c;
  c.stages = stages;
  c.observed = 4;
  c.future = 3;
  c.joints = 3;
  c.dims = 2;
  c.features = 4;
  c.dropout_rate = 0.0;
  return c;
}

}  // namespace

TEST(PadWithLastPose, RepeatsFinalFrame) {
  Tensor<double> obs({1, 2, 1, 2}, {1, 2, 3, 4});
  const auto p = pad_with_last_pose(obs, 3);
  EXPECT_EQ(p.shape(), (Shape{1, 5, 1, 2}));
  const std::vector<double> expect = {1, 2, 3, 4, 3, 4, 3, 4, 3, 4};
  EXPECT_EQ(std::vector<double>(p.values().begin(), p.values().end()), expect);

  MotionSequence seq{Tensor<float>({1, 1, 3}, {7, 8, 9}), 25.0};
  const auto s = pad_with_last_pose(seq, 2);
  EXPECT_EQ(s.length(), 3u);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(s.frames.at(t, 0, 2), 9.0f);
  EXPECT_THROW(pad_with_last_pose(Tensor<double>({1, 0, 1, 2}), 2), ShapeError);
  EXPECT_THROW(pad_with_last_pose(obs, 0), std::invalid_argument);
}

TEST(CopyFeatures, CountsAndAdjoint) {
  const auto x = random_tensor({2, 3, 4, 5}, 1);
  EXPECT_EQ(copy_features(x, 0, CopyAxis::kTemporal), x);
  const auto one = copy_features(x, 1, CopyAxis::kTemporal);
  EXPECT_EQ(one.shape(), (Shape{2, 6, 4, 5}));
  EXPECT_EQ(one.at(1, 4, 2, 3), x.at(1, 1, 2, 3));
  EXPECT_EQ(copy_features(x, 3, CopyAxis::kTemporal).shape(), (Shape{2, 12, 4, 5}));
  EXPECT_EQ(copy_features(x, 1, CopyAxis::kSpatial).shape(), (Shape{2, 3, 8, 5}));
  EXPECT_EQ(copy_features(x, 1, CopyAxis::kChannel).shape(), (Shape{2, 3, 4, 10}));
  EXPECT_THROW(copy_features(x, 2, CopyAxis::kTemporal), std::invalid_argument);

  for (CopyAxis axis : {CopyAxis::kTemporal, CopyAxis::kSpatial, CopyAxis::kChannel}) {
    const auto g = random_tensor(copy_features(x, 3, axis).shape(), 2);
    // <copy(x), g> == <x, copy^T(g)>
    EXPECT_NEAR(dot(g, copy_features(x, 3, axis)), dot(x, copy_features_backward(g, 3, axis)), 1e-10);
  }
}

TEST(Encoder, ShapeAndZeroGammaReducesToProjection) {
  ModelConfig c = small_config(1);
  c.features = 16;
  auto m = make_model<double>(c, 3);
  const auto x = random_tensor({2, 7, 3, 2}, 4);
  EXPECT_EQ(encoder_forward(m.stage(0), x, Mode::kEval, nullptr).shape(), (Shape{2, 7, 3, 16}));

  auto& s = m.stage(0);
  for (auto& gcb : s.enc_gcbs) {
    gcb.second.bn.gamma.value.fill(0.0);
    gcb.second.bn.beta.value.fill(0.0);
  }
  s.enc_in.bn.gamma.value.fill(0.0);
  s.enc_in.bn.beta.value.fill(0.0);
  const auto y = encoder_forward(s, x, Mode::kEval, nullptr);
  EXPECT_LE(max_abs_diff(y, pointwise_forward(s.enc_proj, x)), 1e-12);
}

TEST(Decoder, ShapeAndZeroBodyReducesToProjection) {
  auto m = make_model<double>(small_config(1), 5);
  auto& s = m.stage(0);
  const auto h = random_tensor({2, 14, 3, 4}, 6);
  EXPECT_EQ(decoder_forward(s, h, Mode::kEval, nullptr).shape(), (Shape{2, 14, 3, 2}));
  s.dec_out_sdgcn.weight.value.fill(0.0);
  EXPECT_LE(max_abs_diff(decoder_forward(s, h, Mode::kEval, nullptr), pointwise_forward(s.dec_proj, h)), 1e-12);
}

TEST(Stage, ShapeDeterminismAndVariants) {
  for (std::size_t copies : {0u, 1u, 3u}) {
    for (CopyAxis axis : {CopyAxis::kTemporal, CopyAxis::kSpatial, CopyAxis::kChannel}) {
      ModelConfig c = small_config(1);
      c.copy_count = copies;
      c.copy_axis = axis;
      c.dropout_rate = 0.3;
      const auto m = make_model<double>(c, 7);
      const auto x = random_tensor({2, 7, 3, 2}, 8);
      const auto y = stage_forward(m.stage(0), c, x, Mode::kEval, nullptr);
      EXPECT_EQ(y.shape(), x.shape());
      EXPECT_EQ(y, stage_forward(m.stage(0), c, x, Mode::kEval, nullptr));
      for (double v : y.values()) EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(Multistage, OutputsAndHistoryInvariant) {
  ModelConfig c = small_config(4);
  const auto m = make_model<double>(c, 9);
  const auto obs = random_tensor({2, 4, 3, 2}, 10);
  MultiStageCache<double> cache;
  const auto out = multistage_forward<double>(m, obs, Mode::kEval, nullptr, &cache);
  ASSERT_EQ(out.size(), 4u);
  for (const auto& o : out) EXPECT_EQ(o.shape(), (Shape{2, 7, 3, 2}));
  ASSERT_EQ(cache.inputs.size(), 4u);
  EXPECT_EQ(cache.inputs[0], pad_with_last_pose(obs, 3));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(slice_axis(cache.inputs[i], kFrames, 0, 4), obs);
  for (std::size_t i = 1; i < 4; ++i)
    EXPECT_EQ(slice_axis(cache.inputs[i], kFrames, 4, 3), slice_axis(out[i - 1], kFrames, 4, 3));

  ModelConfig one = small_config(1);
  const auto m1 = make_model<double>(one, 9);
  const auto single = multistage_forward<double>(m1, obs, Mode::kEval, nullptr);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0], stage_forward(m1.stage(0), one, pad_with_last_pose(obs, 3), Mode::kEval, nullptr));

  EXPECT_THROW(multistage_forward<double>(m, random_tensor({2, 5, 3, 2}, 11), Mode::kEval, nullptr), ShapeError);
}

TEST(Multistage, InitialGuessReplacesPadding) {
  const ModelConfig c = small_config(2);
  const auto m = make_model<double>(c, 12);
  const auto obs = random_tensor({1, 4, 3, 2}, 13);
  const auto guess = random_tensor({1, 3, 3, 2}, 14);
  MultiStageCache<double> cache;
  multistage_forward<double>(m, obs, Mode::kEval, nullptr, &cache, &guess);
  EXPECT_EQ(slice_axis(cache.inputs[0], kFrames, 4, 3), guess);
}

TEST(Model, ParameterCountMatchesBuffers) {
  std::vector<ModelConfig> configs;
  configs.push_back(ModelConfig{});
  configs.push_back(small_config(3));
  ModelConfig shared = small_config(3);
  shared.share_stage_weights = true;
  configs.push_back(shared);
  for (std::size_t copies : {0u, 3u})
    for (CopyAxis axis : {CopyAxis::kSpatial, CopyAxis::kChannel}) {
      ModelConfig v = small_config(2);
      v.copy_count = copies;
      v.copy_axis = axis;
      v.projection_bias = true;
      configs.push_back(v);
    }
  ModelConfig budget = small_config(1);
  budget.gcb_budget = 12;
  configs.push_back(budget);
  for (const auto& c : configs) {
    auto m = make_model<float>(c, 1);
    EXPECT_EQ(parameter_count(c), count_parameters(m));
  }
}

TEST(Model, SeedDeterminesInitialization) {
  const auto c = small_config(2);
  auto a = make_model<double>(c, 15), b = make_model<double>(c, 15), d = make_model<double>(c, 16);
  const auto obs = random_tensor({1, 4, 3, 2}, 17);
  const auto ya = multistage_forward<double>(a, obs, Mode::kEval, nullptr);
  EXPECT_EQ(ya, multistage_forward<double>(b, obs, Mode::kEval, nullptr));
  EXPECT_NE(ya, multistage_forward<double>(d, obs, Mode::kEval, nullptr));
}

TEST(Multistage, EndToEndDirectionalDerivative) {
  ModelConfig c;
  c.stages = 2;
  c.observed = 6;
  c.future = 6;
  c.joints = 3;
  c.dims = 2;
  c.features = 4;
  c.dropout_rate = 0.0;
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    auto m = make_model<double>(c, 18);
    const auto obs = random_tensor({2, 6, 3, 2}, 19);
    std::vector<Tensor<double>> w = {random_tensor({2, 12, 3, 2}, 20), random_tensor({2, 12, 3, 2}, 21)};
    auto loss = [&] {
      const auto out = multistage_forward<double>(m, obs, mode, nullptr);
      return dot(w[0], out[0]) + dot(w[1], out[1]);
    };
    zero_grad(m);
    MultiStageCache<double> cache;
    multistage_forward<double>(m, obs, mode, nullptr, &cache);
    multistage_backward(m, cache, w);

    std::vector<Tensor<double>> dir;
    double analytic = 0.0;
    std::uint64_t seed = 100;
    for_each_param(m, [&](const std::string&, Param<double>& p) {
      dir.push_back(random_tensor(p.value.shape(), seed++));
      analytic += dot(dir.back(), p.grad);
    });
    auto shift = [&](double h) {
      std::size_t k = 0;
      for_each_param(m, [&](const std::string&, Param<double>& p) { p.value += dir[k++] * h; });
    };
    const double h = 1e-5;
    shift(h);
    const double up = loss();
    shift(-2 * h);
    const double down = loss();
    shift(h);
    const double numeric = (up - down) / (2 * h);
    EXPECT_LE(std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-6), 1e-4);

    // Spot-check one stage-1 buffer coordinate by coordinate.
    auto& adj = m.stage(1).dec_out_tdgcn.adjacency;
    EXPECT_LE(max_rel_error(adj.grad, numeric_gradient(adj.value, loss)), 1e-4);
  }
}

TEST(Multistage, SharedWeightsAccumulateAcrossStages) {
  ModelConfig c = small_config(3);
  c.share_stage_weights = true;
  auto m = make_model<double>(c, 22);
  ASSERT_EQ(m.stages.size(), 1u);
  const auto obs = random_tensor({1, 4, 3, 2}, 23);
  std::vector<Tensor<double>> w;
  for (int i = 0; i < 3; ++i) w.push_back(random_tensor({1, 7, 3, 2}, 24 + i));
  auto loss = [&] {
    const auto out = multistage_forward<double>(m, obs, Mode::kEval, nullptr);
    return dot(w[0], out[0]) + dot(w[1], out[1]) + dot(w[2], out[2]);
  };
  zero_grad(m);
  MultiStageCache<double> cache;
  multistage_forward<double>(m, obs, Mode::kEval, nullptr, &cache);
  multistage_backward(m, cache, w);
  auto& wt = m.stage(0).dec_proj.weight;
  EXPECT_LE(max_rel_error(wt.grad, numeric_gradient(wt.value, loss)), 1e-4);
}
