#include "pixsr/solver.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "pixsr/errors.h"
#include "pixsr/parallel.h"

namespace pixsr {

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_blocks < 1) throw ConfigError("batch size must be >= 1");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("ADAM betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("ADAM eps must be > 0");
  if (log_every < 0) throw ConfigError("log interval must be >= 0");
}

FitProblem PrepareProblem(const SourceImage& source, const GuideImage& guide) {
  if (source.channels() != 1) {
    throw DimensionError("source must have a single channel");
  }
  FitProblem problem;
  problem.factor = InferFactor(source, guide);
  problem.source_stats = ComputeNormStats(source);
  problem.guide_stats = ComputeNormStats(guide);
  problem.source = Normalize(source, problem.source_stats);
  problem.guide = Normalize(guide, problem.guide_stats);
  problem.coords = CoordinateChannels(guide.height(), guide.width());
  return problem;
}

int ChunkBlocks(UpsamplingFactor factor) {
  constexpr int kChunkPixels = 1024;
  return std::max(1, kChunkPixels / factor.block_pixels());
}

namespace {

struct ChunkOutput {
  std::vector<double> residuals;  // signed s_m - mean, batch order
  GradBuffer grads;
  std::uint64_t pattern = 0;
};

void GatherBlock(const FitProblem& problem, int block, Eigen::MatrixXd& guide,
                 Eigen::MatrixXd& coords, Eigen::Index column) {
  const int d = problem.factor.value();
  const int my = block / problem.source.width();
  const int mx = block % problem.source.width();
  const int channels = problem.guide.channels();
  for (int dy = 0; dy < d; ++dy) {
    for (int dx = 0; dx < d; ++dx, ++column) {
      const int y = my * d + dy;
      const int x = mx * d + dx;
      const auto g = problem.guide.pixel(y, x);
      for (int c = 0; c < channels; ++c) guide(c, column) = g[c];
      coords(0, column) = problem.coords.at(y, x, 0);
      coords(1, column) = problem.coords.at(y, x, 1);
    }
  }
}

ChunkOutput RunChunk(const MlpParams& params, const FitProblem& problem,
                     std::span<const int> blocks, bool with_gradients) {
  const int block_pixels = problem.factor.block_pixels();
  const Eigen::Index n = static_cast<Eigen::Index>(blocks.size()) * block_pixels;
  Eigen::MatrixXd guide(problem.guide.channels(), n);
  Eigen::MatrixXd coords(2, n);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    GatherBlock(problem, blocks[b], guide, coords,
                static_cast<Eigen::Index>(b) * block_pixels);
  }
  NetworkCache cache;
  const Eigen::RowVectorXd out = NetworkForward(params, guide, coords, &cache);

  ChunkOutput result;
  result.residuals.resize(blocks.size());
  Eigen::RowVectorXd output_grad(n);
  PatternHasher hasher;
  const double inv = 1.0 / block_pixels;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Eigen::Index start = static_cast<Eigen::Index>(b) * block_pixels;
    const double mean = out.segment(start, block_pixels).sum() * inv;
    const int block = blocks[b];
    const double s = problem.source.at(block / problem.source.width(),
                                       block % problem.source.width());
    const double r = s - mean;
    result.residuals[b] = r;
    hasher.Add(r > 0.0);
    // d|r|/dt_n = -sign(r) / D^2, with sign(0) = 0.
    const double g = r > 0.0 ? -inv : (r < 0.0 ? inv : 0.0);
    output_grad.segment(start, block_pixels).setConstant(g);
  }
  HashActivationPattern(cache, hasher);
  result.pattern = hasher.value();
  if (with_gradients) {
    result.grads = GradBuffer::ZerosLike(params);
    BackwardData(params, cache, output_grad, result.grads);
  }
  return result;
}

}  // namespace

ObjectiveResult EvaluateObjective(const MlpParams& params,
                                  const FitProblem& problem,
                                  std::span<const int> blocks,
                                  bool with_gradients) {
  if (blocks.empty()) throw ArgumentError("objective needs a non-empty batch");
  for (int b : blocks) {
    if (b < 0 || b >= problem.block_count()) {
      throw ArgumentError("block index " + std::to_string(b) +
                          " out of range");
    }
  }
  const std::size_t chunk = static_cast<std::size_t>(ChunkBlocks(problem.factor));
  const std::size_t chunks = (blocks.size() + chunk - 1) / chunk;
  std::vector<ChunkOutput> outputs(chunks);
  ParallelFor(chunks, [&](std::size_t i) {
    const std::size_t begin = i * chunk;
    const std::size_t len = std::min(chunk, blocks.size() - begin);
    outputs[i] = RunChunk(params, problem, blocks.subspan(begin, len),
                          with_gradients);
  });

  ObjectiveResult result;
  std::uint64_t digest = PatternHasher().value();
  for (const auto& out : outputs) {
    for (double r : out.residuals) result.data_loss += std::abs(r);
    digest = (digest ^ out.pattern) * 0x100000001b3ULL;
  }
  result.pattern = digest;
  result.penalty = WeightPenalty(params);
  if (with_gradients) {
    result.grads = std::move(outputs.front().grads);
    for (std::size_t i = 1; i < outputs.size(); ++i) {
      result.grads += outputs[i].grads;
    }
    AddPenaltyGradient(params, result.grads);
  }
  return result;
}

GradientCheckReport CheckObjectiveGradients(
    const MlpParams& params, const FitProblem& problem,
    std::span<const int> blocks, const GradientCheckOptions& options) {
  const ObjectiveResult base = EvaluateObjective(params, problem, blocks, true);
  const std::vector<double> analytic = FlattenGradients(base.grads);
  std::vector<double> flat = FlattenParameters(params);
  MlpParams probe = params;
  return CheckGradients(flat, analytic, [&]() {
    AssignParameters(flat, probe);
    const ObjectiveResult r = EvaluateObjective(probe, problem, blocks, false);
    return LossSample{r.total(), r.pattern};
  }, options);
}

std::vector<int> SampleBatch(std::mt19937_64& rng, int block_count, int k) {
  if (k < 1) throw ArgumentError("batch size must be >= 1");
  if (block_count < 1) throw ArgumentError("no blocks to sample from");
  std::uniform_int_distribution<int> dist(0, block_count - 1);
  std::vector<int> batch(static_cast<std::size_t>(k));
  for (int& b : batch) b = dist(rng);
  return batch;
}

AdamState AdamState::ZerosLike(const MlpParams& params) {
  return {GradBuffer::ZerosLike(params), GradBuffer::ZerosLike(params), 0};
}

void AdamStep(MlpParams& params, const GradBuffer& grads, AdamState& state,
              const AdamOptions& options) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  GradBuffer& m_stacks = state.first_moment;
  GradBuffer& v_stacks = state.second_moment;
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
        m.rows() != grad.rows() || m.cols() != grad.cols()) {
      throw ShapeError("ADAM state does not match parameters");
    }
    m = options.beta1 * m + (1.0 - options.beta1) * grad;
    v = options.beta2 * v + (1.0 - options.beta2) * grad.cwiseAbs2();
    param.array() -= options.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + options.eps);
  };
  auto stacks = [&](LayerStack& p, const LayerStack& g, LayerStack& m,
                    LayerStack& v) {
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
      throw ShapeError("ADAM state does not match parameters");
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      update(p[k].weights, g[k].weights, m[k].weights, v[k].weights);
      update(p[k].biases, g[k].biases, m[k].biases, v[k].biases);
    }
  };
  stacks(params.color_branch, grads.color_branch, m_stacks.color_branch,
         v_stacks.color_branch);
  stacks(params.spatial_branch, grads.spatial_branch,
         m_stacks.spatial_branch, v_stacks.spatial_branch);
  stacks(params.head, grads.head, m_stacks.head, v_stacks.head);
}

double ConsistencyMae(const TargetImage& prediction, const SourceImage& source,
                      UpsamplingFactor factor) {
  const SourceImage down = BlockDownsample(prediction, factor);
  if (!down.SameShape(source)) {
    throw DimensionError("prediction does not downsample to the source size");
  }
  double sum = 0.0;
  const auto a = down.data();
  const auto b = source.data();
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

namespace {

// Every iteration allocates chunk matrices of a few hundred KiB. With
// glibc's default thresholds these are served by mmap/munmap, which costs
// more than the arithmetic on small images.
void KeepWorkspacesOnHeap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 128 * 1024 * 1024);
  });
#endif
}

}  // namespace

FitResult Fit(const SourceImage& source, const GuideImage& guide,
              const ModelConfig& model_config, const TrainConfig& train_config,
              const FitObserver& observer) {
  train_config.Validate();
  KeepWorkspacesOnHeap();
  const FitProblem problem = PrepareProblem(source, guide);
  MlpParams params = InitModel(model_config, guide.channels());
  AdamState adam = AdamState::ZerosLike(params);
  const AdamOptions adam_options{train_config.learning_rate,
                                 train_config.adam_beta1,
                                 train_config.adam_beta2,
                                 train_config.adam_eps};
  std::mt19937_64 rng(train_config.seed);

  FitResult result;
  result.source_stats = problem.source_stats;
  result.initial_consistency_mae = ConsistencyMae(
      PredictImage(params, problem.guide, problem.coords), problem.source,
      problem.factor);

  const int iterations = train_config.iterations;
  for (int it = 0; it < iterations; ++it) {
    const std::vector<int> batch =
        SampleBatch(rng, problem.block_count(), train_config.batch_blocks);
    const ObjectiveResult objective =
        EvaluateObjective(params, problem, batch, true);
    if (!std::isfinite(objective.total())) {
      throw DivergenceError(it, objective.total());
    }
    const bool log = it == 0 || it + 1 == iterations ||
                     (train_config.log_every > 0 &&
                      it % train_config.log_every == 0);
    if (log) {
      result.loss_trace.push_back({it, objective.data_loss, objective.penalty});
    }
    AdamStep(params, objective.grads, adam, adam_options);
    if (observer) observer(it + 1, params, problem);
  }
  if (!params.AllFinite()) {
    throw DivergenceError(iterations, std::numeric_limits<double>::quiet_NaN());
  }

  result.normalized_prediction =
      PredictImage(params, problem.guide, problem.coords);
  result.final_consistency_mae = ConsistencyMae(
      result.normalized_prediction, problem.source, problem.factor);
  result.prediction =
      Denormalize(result.normalized_prediction, problem.source_stats);
  result.params = std::move(params);
  return result;
}

TargetImage Upsample(const SourceImage& source, const GuideImage& guide,
                     const ModelConfig& model_config,
                     const TrainConfig& train_config) {
  return Fit(source, guide, model_config, train_config).prediction;
}

void WriteTraceCsv(std::ostream& out, std::span<const TraceEntry> trace) {
  out << "iteration,data_loss,penalty,total\n";
  out << std::setprecision(17);
  for (const auto& e : trace) {
    out << e.iteration << ',' << e.data_loss << ',' << e.penalty << ','
        << e.data_loss + e.penalty << '\n';
  }
}

}  // namespace pixsr
