#include "pixsr/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include "pixsr/errors.h"
#include "pixsr/imaging.h"
#include "pixsr/parallel.h"

namespace pixsr {

void ModelConfig::Validate() const {
  if (hidden_width < 1 || color_depth < 1 || spatial_depth < 1 ||
      head_depth < 1) {
    throw ConfigError("model width and depths must be positive");
  }
  if (!(lambda_g >= 0.0) || !(lambda_x >= 0.0) || !(lambda_head >= 0.0)) {
    throw ConfigError("regularisation weights must be non-negative");
  }
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* stack : {&color_branch, &spatial_branch, &head}) {
    for (const auto& layer : *stack) {
      n += layer.weights.size() + layer.biases.size();
    }
  }
  return n;
}

bool MlpParams::AllFinite() const {
  for (const auto* stack : {&color_branch, &spatial_branch, &head}) {
    for (const auto& layer : *stack) {
      if (!layer.AllFinite()) return false;
    }
  }
  return true;
}

namespace {

void CheckChain(const LayerStack& stack, const char* name) {
  if (stack.empty()) {
    throw ShapeError(std::string(name) + " has no layers");
  }
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const auto& layer = stack[k];
    if (layer.biases.size() != layer.weights.rows()) {
      throw ShapeError(std::string(name) + " layer " + std::to_string(k) +
                       " bias length mismatch");
    }
    if (k > 0 && layer.in_dim() != stack[k - 1].out_dim()) {
      throw ShapeError(std::string(name) + " layer " + std::to_string(k) +
                       " does not chain with its predecessor");
    }
  }
}

}  // namespace

void MlpParams::Validate() const {
  CheckChain(color_branch, "color branch");
  CheckChain(spatial_branch, "spatial branch");
  CheckChain(head, "head");
  if (spatial_branch.front().in_dim() != 2) {
    throw ShapeError("spatial branch must take 2 coordinates");
  }
  if (color_branch.back().out_dim() != spatial_branch.back().out_dim()) {
    throw ShapeError("branch output widths differ; cannot merge by addition");
  }
  if (head.front().in_dim() != color_branch.back().out_dim()) {
    throw ShapeError("head input width does not match branch width");
  }
  if (head.back().out_dim() != 1) {
    throw ShapeError("head must produce a single value");
  }
  if (!(lambda_g >= 0.0) || !(lambda_x >= 0.0) || !(lambda_head >= 0.0)) {
    throw ConfigError("regularisation weights must be non-negative");
  }
}

GradBuffer GradBuffer::ZerosLike(const MlpParams& params) {
  return {pixsr::ZerosLike(params.color_branch),
          pixsr::ZerosLike(params.spatial_branch),
          pixsr::ZerosLike(params.head)};
}

GradBuffer& GradBuffer::operator+=(const GradBuffer& other) {
  ForEachBlock(*this, other,
               [](auto& mine, const auto& theirs) { mine += theirs; });
  return *this;
}

namespace {

LayerStack MakeStack(int in_dim, int width, int depth, int out_dim,
                     std::mt19937_64& rng) {
  LayerStack stack;
  int fan_in = in_dim;
  for (int k = 0; k < depth; ++k) {
    const int out = k + 1 == depth ? out_dim : width;
    DenseLayer layer(out, fan_in);
    const double bound = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < fan_in; ++j) layer.weights(i, j) = dist(rng);
    }
    stack.push_back(std::move(layer));
    fan_in = out;
  }
  return stack;
}

}  // namespace

MlpParams InitModel(const ModelConfig& config, int guide_channels) {
  config.Validate();
  if (guide_channels < 1) {
    throw ConfigError("guide must have at least one channel");
  }
  std::mt19937_64 rng(config.init_seed);
  MlpParams params;
  const int w = config.hidden_width;
  params.color_branch = MakeStack(guide_channels, w, config.color_depth, w, rng);
  params.spatial_branch = MakeStack(2, w, config.spatial_depth, w, rng);
  params.head = MakeStack(w, w, config.head_depth, 1, rng);
  params.lambda_g = config.lambda_g;
  params.lambda_x = config.lambda_x;
  params.lambda_head = config.lambda_head;
  return params;
}

namespace {

Eigen::VectorXd BranchForward(const LayerStack& stack, Eigen::VectorXd x) {
  for (const auto& layer : stack) x = Relu(DenseForward(layer, x));
  return x;
}

}  // namespace

double PredictPixel(const MlpParams& params, std::span<const double> guide,
                    std::span<const double> coords) {
  if (static_cast<int>(guide.size()) != params.guide_channels()) {
    throw ShapeError("pixel has " + std::to_string(guide.size()) +
                     " guide channels, network expects " +
                     std::to_string(params.guide_channels()));
  }
  if (coords.size() != 2) {
    throw ShapeError("pixel coordinates must have 2 entries");
  }
  const Eigen::VectorXd g =
      Eigen::Map<const Eigen::VectorXd>(guide.data(), guide.size());
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(coords.data(), 2);
  Eigen::VectorXd h = BranchForward(params.color_branch, g) +
                      BranchForward(params.spatial_branch, x);
  for (std::size_t k = 0; k < params.head.size(); ++k) {
    h = DenseForward(params.head[k], h);
    if (k + 1 < params.head.size()) h = Relu(h);
  }
  return h(0);
}

TargetImage PredictImage(const MlpParams& params, const GuideImage& guide,
                         const Image& coords) {
  if (coords.channels() != 2 || coords.height() != guide.height() ||
      coords.width() != guide.width()) {
    throw ShapeError("coordinate grid does not match guide");
  }
  if (guide.channels() != params.guide_channels()) {
    throw ShapeError("guide has " + std::to_string(guide.channels()) +
                     " channels, network expects " +
                     std::to_string(params.guide_channels()));
  }
  TargetImage out(guide.height(), guide.width(), 1);
  ParallelFor(static_cast<std::size_t>(guide.height()), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < guide.width(); ++x) {
      out.at(y, x) = PredictPixel(params, guide.pixel(y, x), coords.pixel(y, x));
    }
  });
  return out;
}

TargetImage PredictImage(const MlpParams& params, const GuideImage& guide) {
  return PredictImage(params, guide,
                      CoordinateChannels(guide.height(), guide.width()));
}

double WeightPenalty(const MlpParams& params) {
  return params.lambda_g * SquaredWeightNorm(params.color_branch) +
         params.lambda_x * SquaredWeightNorm(params.spatial_branch) +
         params.lambda_head * SquaredWeightNorm(params.head);
}

Eigen::RowVectorXd NetworkForward(const MlpParams& params,
                                  const Eigen::MatrixXd& guide,
                                  const Eigen::MatrixXd& coords,
                                  NetworkCache* cache) {
  if (guide.cols() != coords.cols()) {
    throw ShapeError("guide and coordinate batches differ in size");
  }
  StackCache* color = cache ? &cache->color : nullptr;
  StackCache* spatial = cache ? &cache->spatial : nullptr;
  StackCache* head = cache ? &cache->head : nullptr;
  Eigen::MatrixXd merged = StackForward(params.color_branch, guide, false, color);
  merged += StackForward(params.spatial_branch, coords, false, spatial);
  return StackForward(params.head, merged, true, head);
}

void BackwardData(const MlpParams& params, const NetworkCache& cache,
                  const Eigen::RowVectorXd& output_grad, GradBuffer& grads) {
  if (cache.head.samples() != output_grad.cols()) {
    throw StateError("output gradient has " +
                     std::to_string(output_grad.cols()) +
                     " samples, forward cache has " +
                     std::to_string(cache.head.samples()));
  }
  const Eigen::MatrixXd merged_grad =
      StackBackward(params.head, cache.head, output_grad, true, grads.head);
  // The additive merge passes the same gradient to both branches.
  StackBackward(params.color_branch, cache.color, merged_grad, false,
                grads.color_branch);
  StackBackward(params.spatial_branch, cache.spatial, merged_grad, false,
                grads.spatial_branch);
}

void AddPenaltyGradient(const MlpParams& params, GradBuffer& grads) {
  auto add = [](const LayerStack& p, LayerStack& g, double lambda) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      g[k].weights += (2.0 * lambda) * p[k].weights;
    }
  };
  add(params.color_branch, grads.color_branch, params.lambda_g);
  add(params.spatial_branch, grads.spatial_branch, params.lambda_x);
  add(params.head, grads.head, params.lambda_head);
}

GradBuffer BackwardPass(const MlpParams& params, const NetworkCache& cache,
                        const Eigen::RowVectorXd& output_grad) {
  GradBuffer grads = GradBuffer::ZerosLike(params);
  BackwardData(params, cache, output_grad, grads);
  AddPenaltyGradient(params, grads);
  return grads;
}

void HashActivationPattern(const NetworkCache& cache, PatternHasher& hasher) {
  for (const auto* stack : {&cache.color, &cache.spatial, &cache.head}) {
    for (const auto& z : stack->pre_activations) {
      for (Eigen::Index i = 0; i < z.size(); ++i) hasher.Add(z(i) > 0.0);
    }
  }
}

std::vector<double> FlattenParameters(const MlpParams& params) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  ForEachBlock(params, params, [&](const auto& block, const auto&) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        flat.push_back(block(i, j));
      }
    }
  });
  return flat;
}

void AssignParameters(std::span<const double> flat, MlpParams& params) {
  if (flat.size() != params.parameter_count()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, model has " +
                     std::to_string(params.parameter_count()));
  }
  std::size_t pos = 0;
  ForEachBlock(params, params, [&](auto& block, auto&) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) block(i, j) = flat[pos++];
    }
  });
}

std::vector<double> FlattenGradients(const GradBuffer& grads) {
  std::vector<double> flat;
  ForEachBlock(grads, grads, [&](const auto& block, const auto&) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        flat.push_back(block(i, j));
      }
    }
  });
  return flat;
}

namespace {

constexpr char kMagic[4] = {'P', 'X', 'S', 'R'};

template <typename T>
void WriteLe(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T ReadLe(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw IoError("model file is truncated");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void SaveModel(const std::filesystem::path& path, const MlpParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  WriteLe<std::uint32_t>(out, kModelFileVersion);
  for (const auto* stack :
       {&params.color_branch, &params.spatial_branch, &params.head}) {
    WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(stack->size()));
    for (const auto& layer : *stack) {
      WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(layer.out_dim()));
      WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(layer.in_dim()));
    }
  }
  WriteLe<double>(out, params.lambda_g);
  WriteLe<double>(out, params.lambda_x);
  WriteLe<double>(out, params.lambda_head);
  for (double v : FlattenParameters(params)) WriteLe<double>(out, v);
  if (!out) throw IoError("failed writing " + path.string());
}

MlpParams LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4)) throw IoError("model file is truncated");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + " is not a model file");
  }
  const auto version = ReadLe<std::uint32_t>(in);
  if (version != kModelFileVersion) {
    throw FormatError("unsupported model file version " +
                      std::to_string(version));
  }
  MlpParams params;
  for (auto* stack :
       {&params.color_branch, &params.spatial_branch, &params.head}) {
    const auto count = ReadLe<std::uint32_t>(in);
    if (count == 0 || count > 1024) throw FormatError("bad layer count");
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto out_dim = ReadLe<std::uint32_t>(in);
      const auto in_dim = ReadLe<std::uint32_t>(in);
      if (out_dim == 0 || in_dim == 0 || out_dim > (1u << 16) ||
          in_dim > (1u << 16)) {
        throw FormatError("bad layer dimensions");
      }
      stack->emplace_back(static_cast<int>(out_dim), static_cast<int>(in_dim));
    }
  }
  params.lambda_g = ReadLe<double>(in);
  params.lambda_x = ReadLe<double>(in);
  params.lambda_head = ReadLe<double>(in);
  std::vector<double> flat(params.parameter_count());
  for (double& v : flat) v = ReadLe<double>(in);
  AssignParameters(flat, params);
  params.Validate();
  return params;
}

}  // namespace pixsr
