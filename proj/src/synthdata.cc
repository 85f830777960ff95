#include "pixsr/synthdata.h"

#include <cmath>
#include <numbers>
#include <random>

#include "pixsr/errors.h"
#include "pixsr/imaging.h"

namespace pixsr {

std::string_view SceneKindName(SceneKind kind) {
  switch (kind) {
    case SceneKind::kTwoTone:
      return "two_tone";
    case SceneKind::kStripes:
      return "stripes";
    case SceneKind::kGradientRamp:
      return "gradient_ramp";
    case SceneKind::kTexturedConfuser:
      return "textured_confuser";
  }
  return "unknown";
}

std::optional<SceneKind> ParseSceneKind(std::string_view name) {
  for (SceneKind kind : {SceneKind::kTwoTone, SceneKind::kStripes,
                         SceneKind::kGradientRamp,
                         SceneKind::kTexturedConfuser}) {
    if (SceneKindName(kind) == name) return kind;
  }
  return std::nullopt;
}

void SceneSpec::Validate() const {
  if (size < 2) throw ConfigError("scene size must be >= 2");
  if (channels < 1) throw ConfigError("scene needs at least one channel");
  if (!std::isfinite(tone_low) || !std::isfinite(tone_high) ||
      !(tone_low < tone_high)) {
    throw ConfigError("tone_low must be finite and below tone_high");
  }
  if (stripe_width < 1) throw ConfigError("stripe width must be >= 1");
  if (ramp_step < 1) throw ConfigError("ramp step must be >= 1");
  if (ramp_period < 0 || ramp_period == 1) {
    throw ConfigError("ramp period must be 0 or >= 2");
  }
  if (boundary_column != -1 &&
      (boundary_column < 1 || boundary_column >= size)) {
    throw ConfigError("boundary column must lie inside the image");
  }
}

int SceneSpec::ResolvedBoundary() const {
  if (boundary_column != -1) return boundary_column;
  return std::min(size - 1, (13 * size / 32) | 1);
}

namespace {

// Two distinct colours per channel count.
double ColorA(int c) { return 50.0 + (c * 37) % 60; }
double ColorB(int c) { return 180.0 + (c * 23) % 60; }

void FillColor(GuideImage& guide, int y, int x, bool b) {
  for (int c = 0; c < guide.channels(); ++c) {
    guide.at(y, x, c) = b ? ColorB(c) : ColorA(c);
  }
}

Scene TwoTone(const SceneSpec& spec) {
  Scene scene{GuideImage(spec.size, spec.size, spec.channels),
              TargetImage(spec.size, spec.size, 1)};
  const int boundary = spec.ResolvedBoundary();
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      const bool right = x >= boundary;
      FillColor(scene.guide, y, x, right);
      scene.target.at(y, x) = right ? spec.tone_high : spec.tone_low;
    }
  }
  return scene;
}

Scene Stripes(const SceneSpec& spec) {
  Scene scene{GuideImage(spec.size, spec.size, spec.channels),
              TargetImage(spec.size, spec.size, 1)};
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      const bool odd = (x / spec.stripe_width) % 2 == 1;
      FillColor(scene.guide, y, x, odd);
      scene.target.at(y, x) = odd ? spec.tone_high : spec.tone_low;
    }
  }
  return scene;
}

Scene GradientRamp(const SceneSpec& spec) {
  Scene scene{GuideImage(spec.size, spec.size, spec.channels),
              TargetImage(spec.size, spec.size, 1)};
  const int period = spec.ramp_period > 0 ? spec.ramp_period : spec.size;
  const int levels = (period + spec.ramp_step - 1) / spec.ramp_step;
  const double span = spec.tone_high - spec.tone_low;
  for (int x = 0; x < spec.size; ++x) {
    const int level = (x % period) / spec.ramp_step;
    const double g0 =
        levels > 1 ? std::round(255.0 * level / (levels - 1)) : 0.0;
    const double t = spec.tone_low + span * (g0 / 255.0);
    for (int y = 0; y < spec.size; ++y) {
      for (int c = 0; c < spec.channels; ++c) {
        // Further channels are affine in g0 as well.
        scene.guide.at(y, x, c) = c % 2 == 1 ? 255.0 - g0 : g0;
      }
      scene.target.at(y, x) = t;
    }
  }
  return scene;
}

Scene TexturedConfuser(const SceneSpec& spec) {
  Scene scene{GuideImage(spec.size, spec.size, spec.channels),
              TargetImage(spec.size, spec.size, 1)};
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> texel(0, 255);
  const double mid = 0.5 * (spec.tone_low + spec.tone_high);
  const double amp = 0.5 * (spec.tone_high - spec.tone_low);
  const double n = spec.size;
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      for (int c = 0; c < spec.channels; ++c) {
        scene.guide.at(y, x, c) = texel(rng);
      }
      const double u = (x + 0.5) / n;
      const double v = (y + 0.5) / n;
      const double smooth =
          0.6 * std::sin(std::numbers::pi * u) * std::cos(0.5 * std::numbers::pi * v) +
          0.4 * (u - v);
      scene.target.at(y, x) = mid + amp * smooth;
    }
  }
  return scene;
}

}  // namespace

Scene GenerateScene(const SceneSpec& spec) {
  spec.Validate();
  switch (spec.kind) {
    case SceneKind::kTwoTone:
      return TwoTone(spec);
    case SceneKind::kStripes:
      return Stripes(spec);
    case SceneKind::kGradientRamp:
      return GradientRamp(spec);
    case SceneKind::kTexturedConfuser:
      return TexturedConfuser(spec);
  }
  throw ConfigError("unknown scene kind");
}

SourceImage MakeSource(const TargetImage& target, UpsamplingFactor factor) {
  return BlockDownsample(target, factor);
}

}  // namespace pixsr
