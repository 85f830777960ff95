#ifndef PIXSR_IMAGING_H_
#define PIXSR_IMAGING_H_

#include <vector>

#include "pixsr/image.h"

namespace pixsr {

// Each output pixel is the mean of its D x D block. Throws DimensionError
// unless both image dimensions are multiples of D.
SourceImage BlockDownsample(const TargetImage& target, UpsamplingFactor factor);

// Per-channel centring/scaling statistics (population std).
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  int channels() const { return static_cast<int>(mean.size()); }
};

// A channel with zero spread gets stddev 1 and a warning on stderr.
NormStats ComputeNormStats(const Image& image);
Image Normalize(const Image& image, const NormStats& stats);
Image Denormalize(const Image& image, const NormStats& stats);

// H x W x 2 grid: channel 0 is the column coordinate, channel 1 the row
// coordinate, each mapped linearly so that index 0 -> -0.5 and the last
// index -> +0.5. A length-1 axis maps to 0.
Image CoordinateChannels(int height, int width);

// Keys cubic convolution (a = -0.5), pixel-centre aligned, source indices
// clamped at the borders. Operates on every channel independently.
TargetImage BicubicUpsample(const SourceImage& source, UpsamplingFactor factor);

// Cubic convolution kernel weight for offset t (Keys, a = -0.5).
double CubicKernel(double t);

// Mean over the (2r+1)^2 window clipped to the image, via an integral image.
Image BoxMean(const Image& image, int radius);

// Guided filter of He et al. `guide_gray` and `input` are single-channel
// images of equal size. Windows are clipped at the border.
TargetImage GuidedFilter(const Image& guide_gray, const TargetImage& input,
                         int radius, double eps);

struct GuidedFilterBaselineOptions {
  int radius = 0;  // 0 selects the upsampling factor
  double eps = 1e-4;
};

// Bicubic upsampling followed by guided filtering with the channel-mean of
// the guide, normalised to zero mean and unit std.
TargetImage GuidedFilterBaseline(const SourceImage& source,
                                 const GuideImage& guide,
                                 const GuidedFilterBaselineOptions& options =
                                     {});

}  // namespace pixsr

#endif  // PIXSR_IMAGING_H_
