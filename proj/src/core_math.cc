#include "pixsr/core_math.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pixsr/errors.h"

namespace pixsr {

DenseLayer::DenseLayer(int out_dim, int in_dim) {
  if (out_dim < 1 || in_dim < 1) {
    throw ShapeError("dense layer dimensions must be positive, got " +
                     std::to_string(out_dim) + "x" + std::to_string(in_dim));
  }
  weights = Eigen::MatrixXd::Zero(out_dim, in_dim);
  biases = Eigen::VectorXd::Zero(out_dim);
}

bool DenseLayer::AllFinite() const {
  return weights.allFinite() && biases.allFinite();
}

Eigen::VectorXd DenseForward(const DenseLayer& layer,
                             const Eigen::VectorXd& input) {
  if (input.size() != layer.in_dim()) {
    throw ShapeError("dense layer expects input of length " +
                     std::to_string(layer.in_dim()) + ", got " +
                     std::to_string(input.size()));
  }
  return layer.weights * input + layer.biases;
}

Eigen::MatrixXd DenseForwardBatch(const DenseLayer& layer,
                                  const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != layer.in_dim()) {
    throw ShapeError("dense layer expects inputs with " +
                     std::to_string(layer.in_dim()) + " rows, got " +
                     std::to_string(inputs.rows()));
  }
  Eigen::MatrixXd out = layer.weights * inputs;
  out.colwise() += layer.biases;
  return out;
}

Eigen::VectorXd Relu(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

void ReluInPlace(Eigen::MatrixXd& x) { x = x.cwiseMax(0.0); }

double ReluGrad(double x) { return x > 0.0 ? 1.0 : 0.0; }

Eigen::MatrixXd StackForward(const LayerStack& layers,
                             const Eigen::MatrixXd& input, bool linear_last,
                             StackCache* cache) {
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Eigen::MatrixXd x = input;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Eigen::MatrixXd z = DenseForwardBatch(layers[k], x);
    const bool last = k + 1 == layers.size();
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(x));
      cache->pre_activations.push_back(z);
    }
    if (!(last && linear_last)) ReluInPlace(z);
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd StackBackward(const LayerStack& layers, const StackCache& cache,
                              const Eigen::MatrixXd& output_grad,
                              bool linear_last, LayerStack& grads) {
  if (cache.inputs.size() != layers.size() ||
      cache.pre_activations.size() != layers.size()) {
    throw StateError("forward cache holds " +
                     std::to_string(cache.inputs.size()) +
                     " layers, stack has " + std::to_string(layers.size()));
  }
  if (grads.size() != layers.size()) {
    throw StateError("gradient buffer does not match layer stack");
  }
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const DenseLayer& layer = layers[k];
    const Eigen::MatrixXd& z = cache.pre_activations[k];
    const Eigen::MatrixXd& x = cache.inputs[k];
    if (z.rows() != layer.out_dim() || x.rows() != layer.in_dim() ||
        delta.rows() != z.rows() || delta.cols() != z.cols()) {
      throw StateError("forward cache shape mismatch at layer " +
                       std::to_string(k));
    }
    const bool last = k + 1 == layers.size();
    if (!(last && linear_last)) {
      delta = delta.cwiseProduct(
          z.unaryExpr([](double v) { return ReluGrad(v); }));
    }
    grads[k].weights.noalias() += delta * x.transpose();
    grads[k].biases += delta.rowwise().sum();
    Eigen::MatrixXd next = layer.weights.transpose() * delta;
    delta = std::move(next);
  }
  return delta;
}

LayerStack ZerosLike(const LayerStack& layers) {
  LayerStack out;
  out.reserve(layers.size());
  for (const auto& layer : layers) {
    out.emplace_back(layer.out_dim(), layer.in_dim());
  }
  return out;
}

double SquaredWeightNorm(const LayerStack& layers) {
  double sum = 0.0;
  for (const auto& layer : layers) sum += layer.weights.squaredNorm();
  return sum;
}

GradientCheckReport CheckGradients(std::span<double> params,
                                   std::span<const double> analytic,
                                   const std::function<LossSample()>& loss,
                                   const GradientCheckOptions& options) {
  if (analytic.size() != params.size()) {
    throw ShapeError("analytic gradient has " +
                     std::to_string(analytic.size()) + " entries, expected " +
                     std::to_string(params.size()));
  }
  if (!(options.step > 0.0) || !(options.tolerance > 0.0)) {
    throw ArgumentError("gradient check step and tolerance must be positive");
  }
  GradientCheckReport report;
  const std::uint64_t base_pattern = loss().pattern;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = params[i];
    params[i] = original + options.step;
    const LossSample plus = loss();
    params[i] = original - options.step;
    const LossSample minus = loss();
    params[i] = original;
    if (plus.pattern != base_pattern || minus.pattern != base_pattern) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * options.step);
    const double roundoff = options.roundoff_ulps *
                            std::numeric_limits<double>::epsilon() *
                            std::max(std::abs(plus.loss), std::abs(minus.loss)) /
                            (2.0 * options.step);
    const double scale =
        std::max({std::abs(analytic[i]), std::abs(numeric), options.abs_floor,
                  roundoff / options.tolerance});
    const double rel = std::abs(analytic[i] - numeric) / scale;
    ++report.checked;
    if (!(rel <= options.tolerance)) ++report.failures;
    if (rel > report.max_relative_error || std::isnan(rel)) {
      report.max_relative_error = rel;
      report.worst = {i, analytic[i], numeric, rel};
    }
  }
  report.passed = report.failures == 0;
  return report;
}

}  // namespace pixsr
