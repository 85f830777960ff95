#ifndef PIXSR_SYNTHDATA_H_
#define PIXSR_SYNTHDATA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "pixsr/image.h"

namespace pixsr {

enum class SceneKind { kTwoTone, kStripes, kGradientRamp, kTexturedConfuser };

std::string_view SceneKindName(SceneKind kind);
// Accepts the names printed by SceneKindName ("two_tone", ...).
std::optional<SceneKind> ParseSceneKind(std::string_view name);

struct SceneSpec {
  SceneKind kind = SceneKind::kTwoTone;
  int size = 64;
  int channels = 3;
  std::uint64_t seed = 0;
  // two_tone: first column of the right-hand region; -1 picks an odd column
  // near 0.4 * size, which is never aligned to an even block size.
  int boundary_column = -1;
  // stripes: band width in pixels.
  int stripe_width = 3;
  // gradient_ramp: columns per guide level (1 = a plain ramp).
  int ramp_step = 1;
  // gradient_ramp: the ramp restarts every ramp_period columns (0 = once
  // across the image).
  int ramp_period = 0;
  double tone_low = 10.0;
  double tone_high = 30.0;

  // Throws ConfigError for invalid geometry.
  void Validate() const;
  int ResolvedBoundary() const;
};

// Guides hold integer values in [0, 255] so they survive an 8-bit PNG.
//
//  two_tone          guide colour A / target tone_low left of the boundary,
//                    colour B / tone_high right of it.
//  stripes           vertical bands of stripe_width alternating A/low, B/high.
//  gradient_ramp     guide channel 0 steps along x; the target is an exact
//                    affine function of it spanning [tone_low, tone_high].
//  textured_confuser smooth target in [tone_low, tone_high]; the guide is
//                    seeded per-pixel noise that carries no target structure.
struct Scene {
  GuideImage guide;
  TargetImage target;
};

Scene GenerateScene(const SceneSpec& spec);

// Source image from a ground-truth target (block averaging).
SourceImage MakeSource(const TargetImage& target, UpsamplingFactor factor);

}  // namespace pixsr

#endif  // PIXSR_SYNTHDATA_H_
