#ifndef PIXSR_SOLVER_H_
#define PIXSR_SOLVER_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "pixsr/image.h"
#include "pixsr/imaging.h"
#include "pixsr/model.h"

namespace pixsr {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_blocks = 32;
  int iterations = 32000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  // Trace cadence; 0 records only the first and last iteration.
  int log_every = 100;

  void Validate() const;
};

// Normalised inputs of one fitting problem.
struct FitProblem {
  SourceImage source;  // normalised
  GuideImage guide;    // normalised per channel
  Image coords;        // H x W x 2 in [-0.5, 0.5]
  UpsamplingFactor factor{1};
  NormStats source_stats;
  NormStats guide_stats;

  int block_count() const {
    return source.height() * source.width();
  }
};

// Normalises both images and attaches coordinate channels. Throws
// DimensionError unless guide dims are an integer multiple of source dims.
FitProblem PrepareProblem(const SourceImage& source, const GuideImage& guide);

struct ObjectiveResult {
  double data_loss = 0.0;
  double penalty = 0.0;
  double total() const { return data_loss + penalty; }
  GradBuffer grads;           // empty unless gradients were requested
  std::uint64_t pattern = 0;  // ReLU / L1-sign digest, see LossSample
};

// sum_{m in blocks} |s_m - mean_{n in b(m)} f(g_n, x_n)| + WeightPenalty.
//
// Reduction order: the batch is split into consecutive chunks of
// ChunkBlocks(D) blocks. Each chunk runs one batched forward/backward; the
// per-block residuals are summed in batch order and the per-chunk gradients
// are summed in chunk order, then the penalty gradient is added. The order
// does not depend on the worker count.
ObjectiveResult EvaluateObjective(const MlpParams& params,
                                  const FitProblem& problem,
                                  std::span<const int> blocks,
                                  bool with_gradients = true);

int ChunkBlocks(UpsamplingFactor factor);

// Compares the analytic gradient of EvaluateObjective with central finite
// differences over every parameter. Perturbations that change the ReLU or
// L1-sign pattern of the batch are skipped as kinks.
GradientCheckReport CheckObjectiveGradients(
    const MlpParams& params, const FitProblem& problem,
    std::span<const int> blocks, const GradientCheckOptions& options = {});

// k block indices uniform over [0, block_count) with replacement.
std::vector<int> SampleBatch(std::mt19937_64& rng, int block_count, int k);

struct AdamState {
  GradBuffer first_moment;
  GradBuffer second_moment;
  long step = 0;

  static AdamState ZerosLike(const MlpParams& params);
};

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected ADAM update of every weight and bias.
void AdamStep(MlpParams& params, const GradBuffer& grads, AdamState& state,
              const AdamOptions& options);

struct TraceEntry {
  int iteration = 0;
  double data_loss = 0.0;
  double penalty = 0.0;
};

struct FitResult {
  MlpParams params;
  std::vector<TraceEntry> loss_trace;
  TargetImage prediction;             // in source units
  TargetImage normalized_prediction;  // network output
  NormStats source_stats;
  // mean |down(prediction) - source| in normalised units
  double initial_consistency_mae = 0.0;
  double final_consistency_mae = 0.0;
};

// Called after every optimizer step with the 1-based iteration count.
using FitObserver =
    std::function<void(int iteration, const MlpParams&, const FitProblem&)>;

FitResult Fit(const SourceImage& source, const GuideImage& guide,
              const ModelConfig& model_config, const TrainConfig& train_config,
              const FitObserver& observer = {});

TargetImage Upsample(const SourceImage& source, const GuideImage& guide,
                     const ModelConfig& model_config,
                     const TrainConfig& train_config);

// mean |BlockDownsample(prediction) - source| over source pixels.
double ConsistencyMae(const TargetImage& prediction, const SourceImage& source,
                      UpsamplingFactor factor);

// iteration,data_loss,penalty,total
void WriteTraceCsv(std::ostream& out, std::span<const TraceEntry> trace);

}  // namespace pixsr

#endif  // PIXSR_SOLVER_H_
