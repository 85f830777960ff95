#include "pixsr/model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "pixsr/errors.h"
#include "pixsr/imaging.h"
#include "test_util.h"

namespace pixsr {
namespace {

MlpParams ZeroParams(int width, int channels) {
  ModelConfig config;
  config.hidden_width = width;
  MlpParams params = InitModel(config, channels);
  for (auto* stack : {&params.color_branch, &params.spatial_branch, &params.head}) {
    for (auto& layer : *stack) {
      layer.weights.setZero();
      layer.biases.setZero();
    }
  }
  return params;
}

TEST(InitModelTest, ShapesFollowConfig) {
  ModelConfig config;
  config.hidden_width = 5;
  config.color_depth = 3;
  config.spatial_depth = 1;
  config.head_depth = 2;
  const MlpParams p = InitModel(config, 3);
  ASSERT_EQ(p.color_branch.size(), 3u);
  ASSERT_EQ(p.spatial_branch.size(), 1u);
  ASSERT_EQ(p.head.size(), 2u);
  EXPECT_EQ(p.color_branch[0].weights.rows(), 5);
  EXPECT_EQ(p.color_branch[0].weights.cols(), 3);
  EXPECT_EQ(p.spatial_branch[0].weights.cols(), 2);
  EXPECT_EQ(p.head.back().out_dim(), 1);
  EXPECT_EQ(p.guide_channels(), 3);
  EXPECT_EQ(p.merge_width(), 5);
  EXPECT_NO_THROW(p.Validate());
  EXPECT_EQ(FlattenParameters(p).size(), p.parameter_count());
}

TEST(InitModelTest, DeterministicPerSeed) {
  ModelConfig config;
  config.init_seed = 42;
  const auto a = FlattenParameters(InitModel(config, 3));
  const auto b = FlattenParameters(InitModel(config, 3));
  EXPECT_EQ(a, b);
  config.init_seed = 43;
  EXPECT_NE(a, FlattenParameters(InitModel(config, 3)));
}

TEST(InitModelTest, UniformFanInDistribution) {
  ModelConfig config;
  config.hidden_width = 320;
  config.init_seed = 9;
  const MlpParams p = InitModel(config, 3);
  // Second colour layer: 320 x 320 = 102400 draws from U[-a, a].
  const DenseLayer& layer = p.color_branch[1];
  const double a = std::sqrt(1.0 / 320.0);
  const double n = static_cast<double>(layer.weights.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
    const double w = layer.weights.data()[i];
    ASSERT_LE(std::abs(w), a);
    sum += w;
  }
  const double sigma_of_mean = a / std::sqrt(3.0) / std::sqrt(n);
  EXPECT_LE(std::abs(sum / n), 3.0 * sigma_of_mean);
  EXPECT_TRUE(layer.biases.isZero());
}

TEST(ModelConfigTest, RejectsInvalidSizes) {
  ModelConfig config;
  config.hidden_width = 0;
  EXPECT_THROW(config.Validate(), ConfigError);
  config = {};
  config.head_depth = 0;
  EXPECT_THROW(config.Validate(), ConfigError);
  config = {};
  config.lambda_x = -1.0;
  EXPECT_THROW(config.Validate(), ConfigError);
}

TEST(PredictPixelTest, ZeroNetworkOutputsZero) {
  const MlpParams p = ZeroParams(4, 3);
  const std::vector<double> g{10, 20, 30}, x{0.25, -0.5};
  EXPECT_EQ(PredictPixel(p, g, x), 0.0);
}

TEST(PredictPixelTest, HandComputedWidthTwoNetwork) {
  MlpParams p;
  p.color_branch = {DenseLayer(2, 1)};
  p.color_branch[0].weights << 1, -1;
  p.color_branch[0].biases << 0, 0.5;
  p.spatial_branch = {DenseLayer(2, 2)};
  p.spatial_branch[0].weights << 1, 0, 0, 1;
  p.head = {DenseLayer(1, 2)};
  p.head[0].weights << 2, 3;
  p.head[0].biases << 0.25;
  // colour: relu(1, -0.5) = (1, 0); spatial: relu(0.5, -0.5) = (0.5, 0);
  // head: 2 * 1.5 + 3 * 0 + 0.25.
  const std::vector<double> g{1.0}, x{0.5, -0.5};
  EXPECT_DOUBLE_EQ(PredictPixel(p, g, x), 3.25);
}

TEST(PredictPixelTest, RejectsWrongGuideLength) {
  ModelConfig config;
  const MlpParams p = InitModel(config, 3);
  const std::vector<double> g{1, 2}, x{0, 0};
  EXPECT_THROW(PredictPixel(p, g, x), ShapeError);
}

TEST(PredictImageTest, EqualsPerPixelLoop) {
  ModelConfig config;
  config.init_seed = 4;
  const MlpParams p = InitModel(config, 3);
  for (auto [h, w] : {std::pair{2, 2}, std::pair{7, 5}}) {
    const Image guide = test::RandomImage(h, w, 3, 17);
    const Image coords = CoordinateChannels(h, w);
    const Image out = PredictImage(p, guide, coords);
    ASSERT_EQ(out.height(), h);
    ASSERT_EQ(out.width(), w);
    ASSERT_EQ(out.channels(), 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        EXPECT_EQ(out.at(y, x), PredictPixel(p, guide.pixel(y, x),
                                             coords.pixel(y, x)));
      }
    }
    EXPECT_EQ(out, PredictImage(p, guide));
  }
}

TEST(PredictImageTest, BatchedForwardAgreesWithScalarPath) {
  ModelConfig config;
  config.init_seed = 8;
  const MlpParams p = InitModel(config, 3);
  const Image guide = test::RandomImage(6, 6, 3, 2);
  const Image coords = CoordinateChannels(6, 6);
  Eigen::MatrixXd g(3, 36), x(2, 36);
  for (int i = 0; i < 36; ++i) {
    for (int c = 0; c < 3; ++c) g(c, i) = guide.at(i / 6, i % 6, c);
    for (int c = 0; c < 2; ++c) x(c, i) = coords.at(i / 6, i % 6, c);
  }
  const Eigen::RowVectorXd batched = NetworkForward(p, g, x, nullptr);
  for (int i = 0; i < 36; ++i) {
    const double scalar =
        PredictPixel(p, guide.pixel(i / 6, i % 6), coords.pixel(i / 6, i % 6));
    EXPECT_NEAR(batched(i), scalar, 1e-12 * std::max(1.0, std::abs(scalar)));
  }
}

TEST(PredictImageTest, ConstantGuideWithoutSpatialBranchIsConstant) {
  ModelConfig config;
  config.init_seed = 3;
  MlpParams p = InitModel(config, 3);
  for (auto& layer : p.spatial_branch) {
    layer.weights.setZero();
    layer.biases.setZero();
  }
  const Image guide(5, 4, 3, 0.7);
  const Image out = PredictImage(p, guide);
  for (double v : out.data()) EXPECT_EQ(v, out.at(0, 0));
}

TEST(MergeTest, HeadInputIsBranchSum) {
  ModelConfig config;
  config.init_seed = 12;
  const MlpParams p = InitModel(config, 3);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Random(3, 9);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 9);
  NetworkCache cache;
  NetworkForward(p, g, x, &cache);
  const Eigen::MatrixXd a =
      StackForward(p.color_branch, g, false, nullptr);
  const Eigen::MatrixXd b =
      StackForward(p.spatial_branch, x, false, nullptr);
  EXPECT_EQ(cache.head.inputs[0], a + b);
  EXPECT_EQ(a + b, b + a);
}

TEST(WeightPenaltyTest, Examples) {
  MlpParams zero = ZeroParams(3, 1);
  zero.lambda_g = zero.lambda_x = zero.lambda_head = 1.0;
  EXPECT_EQ(WeightPenalty(zero), 0.0);

  MlpParams one = zero;
  one.lambda_g = 0.5;
  one.color_branch[0].weights(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(WeightPenalty(one), 2.0);
}

TEST(WeightPenaltyTest, MatchesBruteForceAndIgnoresBiases) {
  ModelConfig config;
  config.init_seed = 21;
  config.lambda_g = 0.3;
  config.lambda_x = 0.02;
  config.lambda_head = 1.7;
  MlpParams p = InitModel(config, 3);
  double expected = 0.0;
  auto add = [&](const LayerStack& stack, double lambda) {
    for (const auto& layer : stack) {
      for (int i = 0; i < layer.weights.rows(); ++i) {
        for (int j = 0; j < layer.weights.cols(); ++j) {
          expected += lambda * layer.weights(i, j) * layer.weights(i, j);
        }
      }
    }
  };
  add(p.color_branch, 0.3);
  add(p.spatial_branch, 0.02);
  add(p.head, 1.7);
  const double penalty = WeightPenalty(p);
  EXPECT_LE(test::RelErr(penalty, expected), 1e-12);

  for (auto& layer : p.head) layer.biases.setConstant(5.0);
  EXPECT_EQ(WeightPenalty(p), penalty);
}

TEST(FlattenTest, AssignRoundTrip) {
  ModelConfig config;
  config.init_seed = 5;
  const MlpParams p = InitModel(config, 3);
  std::vector<double> flat = FlattenParameters(p);
  for (double& v : flat) v += 1.0;
  MlpParams q = p;
  AssignParameters(flat, q);
  EXPECT_EQ(FlattenParameters(q), flat);
  EXPECT_EQ(q.head[0].weights(0, 1), p.head[0].weights(0, 1) + 1.0);
  flat.pop_back();
  EXPECT_THROW(AssignParameters(flat, q), ShapeError);
}

TEST(SaveModelTest, RoundTripIsBitExact) {
  test::TempDir dir("model");
  ModelConfig config;
  config.init_seed = 77;
  config.color_depth = 3;
  MlpParams p = InitModel(config, 3);
  p.head[0].biases(2) = 0.125;
  SaveModel(dir / "m.pxsr", p);
  const MlpParams q = LoadModel(dir / "m.pxsr");
  EXPECT_EQ(FlattenParameters(q), FlattenParameters(p));
  EXPECT_EQ(q.lambda_g, p.lambda_g);
  EXPECT_EQ(q.lambda_x, p.lambda_x);
  EXPECT_EQ(q.lambda_head, p.lambda_head);
  EXPECT_EQ(q.color_branch.size(), 3u);
}

TEST(SaveModelTest, RejectsBadFiles) {
  test::TempDir dir("model_bad");
  {
    std::ofstream out(dir / "bad.pxsr", std::ios::binary);
    out << "NOPE0000";
  }
  EXPECT_THROW(LoadModel(dir / "bad.pxsr"), FormatError);
  EXPECT_THROW(LoadModel(dir / "missing.pxsr"), IoError);

  ModelConfig config;
  SaveModel(dir / "m.pxsr", InitModel(config, 3));
  auto bytes = test::ReadBytes(dir.path() / "m.pxsr");
  bytes.resize(bytes.size() / 2);
  {
    std::ofstream out(dir / "cut.pxsr", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_THROW(LoadModel(dir / "cut.pxsr"), IoError);
}

}  // namespace
}  // namespace pixsr
