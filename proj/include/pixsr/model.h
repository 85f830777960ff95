#ifndef PIXSR_MODEL_H_
#define PIXSR_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pixsr/core_math.h"
#include "pixsr/image.h"

namespace pixsr {

struct ModelConfig {
  int hidden_width = 32;
  int color_depth = 2;
  int spatial_depth = 2;
  int head_depth = 2;
  std::uint64_t init_seed = 0;
  double lambda_g = 1e-3;
  double lambda_x = 1e-4;
  double lambda_head = 1e-4;

  // Throws ConfigError on non-positive sizes or negative lambdas.
  void Validate() const;
};

// Two-branch pixel network:
//   t = head(relu(color(g)) + relu(spatial(x)))
// Every branch layer is followed by a ReLU; the head applies a ReLU after
// each layer except the last, which is linear with one output.
struct MlpParams {
  LayerStack color_branch;
  LayerStack spatial_branch;
  LayerStack head;
  double lambda_g = 0.0;
  double lambda_x = 0.0;
  double lambda_head = 0.0;

  int guide_channels() const { return color_branch.front().in_dim(); }
  int merge_width() const { return color_branch.back().out_dim(); }
  std::size_t parameter_count() const;
  bool AllFinite() const;

  // Throws ShapeError if the stacks do not chain or the merge/head contract
  // is violated; ConfigError for negative lambdas.
  void Validate() const;
};

// Gradient with the same layout as MlpParams.
struct GradBuffer {
  LayerStack color_branch;
  LayerStack spatial_branch;
  LayerStack head;

  static GradBuffer ZerosLike(const MlpParams& params);
  GradBuffer& operator+=(const GradBuffer& other);
};

// Weights ~ U[-a, a] with a = sqrt(1 / in_dim), biases zero.
MlpParams InitModel(const ModelConfig& config, int guide_channels);

double PredictPixel(const MlpParams& params, std::span<const double> guide,
                    std::span<const double> coords);

// Applies PredictPixel at every pixel. `coords` must be H x W x 2.
TargetImage PredictImage(const MlpParams& params, const GuideImage& guide,
                         const Image& coords);
TargetImage PredictImage(const MlpParams& params, const GuideImage& guide);

// lambda_g |W_color|^2 + lambda_x |W_spatial|^2 + lambda_head |W_head|^2.
// Biases are not penalised.
double WeightPenalty(const MlpParams& params);

struct NetworkCache {
  StackCache color;
  StackCache spatial;
  StackCache head;
};

// Batched forward over columns. guide: C x P, coords: 2 x P. Returns 1 x P.
Eigen::RowVectorXd NetworkForward(const MlpParams& params,
                                  const Eigen::MatrixXd& guide,
                                  const Eigen::MatrixXd& coords,
                                  NetworkCache* cache);

// Accumulates the data-term gradient for `output_grad` (1 x P) into `grads`.
void BackwardData(const MlpParams& params, const NetworkCache& cache,
                  const Eigen::RowVectorXd& output_grad, GradBuffer& grads);

// Adds 2 lambda_branch W to every weight gradient.
void AddPenaltyGradient(const MlpParams& params, GradBuffer& grads);

// Data-term gradient plus the weight-decay contribution.
GradBuffer BackwardPass(const MlpParams& params, const NetworkCache& cache,
                        const Eigen::RowVectorXd& output_grad);

// Digest of the ReLU on/off pattern recorded in `cache`.
void HashActivationPattern(const NetworkCache& cache, PatternHasher& hasher);

// Flat views in a fixed order: color, spatial, head; per layer the weights
// row-major followed by the biases.
std::vector<double> FlattenParameters(const MlpParams& params);
void AssignParameters(std::span<const double> flat, MlpParams& params);
std::vector<double> FlattenGradients(const GradBuffer& grads);

// Calls fn(param_matrix, grad_matrix) for every weight and bias block in
// flat order.
template <typename Params, typename Grads, typename Fn>
void ForEachBlock(Params& params, Grads& grads, Fn&& fn) {
  auto visit = [&](auto& p_stack, auto& g_stack) {
    for (std::size_t k = 0; k < p_stack.size(); ++k) {
      fn(p_stack[k].weights, g_stack[k].weights);
      fn(p_stack[k].biases, g_stack[k].biases);
    }
  };
  visit(params.color_branch, grads.color_branch);
  visit(params.spatial_branch, grads.spatial_branch);
  visit(params.head, grads.head);
}

// Binary model file, little-endian:
//   "PXSR", u32 version, 3 x (u32 layer count, count x (u32 out, u32 in)),
//   3 x f64 lambda (g, x, head), then per layer in flat order the weights
//   row-major and the biases as f64.
void SaveModel(const std::filesystem::path& path, const MlpParams& params);
MlpParams LoadModel(const std::filesystem::path& path);

inline constexpr std::uint32_t kModelFileVersion = 1;

}  // namespace pixsr

#endif  // PIXSR_MODEL_H_
