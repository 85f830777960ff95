#ifndef PIXSR_CORE_MATH_H_
#define PIXSR_CORE_MATH_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pixsr {

// y = W x + b with W of shape out_dim x in_dim.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;

  DenseLayer() = default;
  DenseLayer(int out_dim, int in_dim);

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
  bool AllFinite() const;
};

using LayerStack = std::vector<DenseLayer>;

// Throws ShapeError when input.size() != layer.in_dim().
Eigen::VectorXd DenseForward(const DenseLayer& layer,
                             const Eigen::VectorXd& input);
// Column-batched variant: each column of `inputs` is one sample.
Eigen::MatrixXd DenseForwardBatch(const DenseLayer& layer,
                                  const Eigen::MatrixXd& inputs);

// Rectified linear unit, elementwise.
Eigen::VectorXd Relu(const Eigen::VectorXd& x);
void ReluInPlace(Eigen::MatrixXd& x);
// Subgradient indicator: 1 for x > 0, 0 otherwise (including x == 0).
double ReluGrad(double x);

// Per-stack record of a batched forward pass: inputs[k] is the input to
// layer k (one column per sample), pre_activations[k] its affine output.
struct StackCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
  long samples() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

// Applies the stack with ReLU after every layer, except after the last one
// when `linear_last` is set. Returns the stack output.
Eigen::MatrixXd StackForward(const LayerStack& layers,
                             const Eigen::MatrixXd& input, bool linear_last,
                             StackCache* cache);

// Accumulates dLoss/dW and dLoss/db of every layer into `grads` (same shapes
// as `layers`) and returns dLoss/dinput. `output_grad` is the gradient
// w.r.t. the stack output. Throws StateError if the cache does not match.
Eigen::MatrixXd StackBackward(const LayerStack& layers, const StackCache& cache,
                              const Eigen::MatrixXd& output_grad,
                              bool linear_last, LayerStack& grads);

// Zero-valued stack with the same shapes.
LayerStack ZerosLike(const LayerStack& layers);
double SquaredWeightNorm(const LayerStack& layers);

// Result of evaluating a loss for a finite-difference check. `pattern` is a
// digest of every non-differentiable branch taken (ReLU on/off, L1 sign);
// the perturbation pair for a parameter is only compared when both sides
// share the pattern of the base point.
struct LossSample {
  double loss = 0.0;
  std::uint64_t pattern = 0;
};

struct GradientCheckEntry {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::size_t failures = 0;
  bool passed = true;
  GradientCheckEntry worst;
};

struct GradientCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-6;
  // The floor is raised so that this many ulps of the loss, divided by
  // 2 * step, stay within tolerance: the rounding noise of the difference
  // quotient is not reported as a gradient error.
  double roundoff_ulps = 8.0;
};

// Central finite differences over every entry of `params`. `loss` is called
// after each in-place perturbation and must read the current values. The
// parameters are restored before returning. Failures are reported, not
// thrown.
GradientCheckReport CheckGradients(std::span<double> params,
                                   std::span<const double> analytic,
                                   const std::function<LossSample()>& loss,
                                   const GradientCheckOptions& options = {});

// FNV-1a style incremental digest for LossSample::pattern.
class PatternHasher {
 public:
  void Add(bool bit) {
    hash_ ^= bit ? 0x9e3779b97f4a7c15ULL : 0x632be59bd9b4e019ULL;
    hash_ *= 0x100000001b3ULL;
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace pixsr

#endif  // PIXSR_CORE_MATH_H_
