#include "pixsr/imaging.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "pixsr/errors.h"

namespace pixsr {

SourceImage BlockDownsample(const TargetImage& target,
                            UpsamplingFactor factor) {
  const int d = factor.value();
  if (target.empty() || target.height() % d != 0 || target.width() % d != 0) {
    throw DimensionError("image " + std::to_string(target.height()) + "x" +
                         std::to_string(target.width()) +
                         " is not divisible by factor " + std::to_string(d));
  }
  const int channels = target.channels();
  SourceImage out(target.height() / d, target.width() / d, channels);
  const double inv = 1.0 / factor.block_pixels();
  for (int my = 0; my < out.height(); ++my) {
    for (int mx = 0; mx < out.width(); ++mx) {
      for (int c = 0; c < channels; ++c) {
        double sum = 0.0;
        for (int dy = 0; dy < d; ++dy) {
          for (int dx = 0; dx < d; ++dx) {
            sum += target.at(my * d + dy, mx * d + dx, c);
          }
        }
        out.at(my, mx, c) = sum * inv;
      }
    }
  }
  return out;
}

NormStats ComputeNormStats(const Image& image) {
  const int channels = image.channels();
  const std::size_t n = image.pixel_count();
  NormStats stats;
  stats.mean.assign(channels, 0.0);
  stats.stddev.assign(channels, 0.0);
  const auto data = image.data();
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += data[i * channels + c];
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = data[i * channels + c] - mean;
      sq += diff * diff;
    }
    double stddev = std::sqrt(sq / static_cast<double>(n));
    if (!(stddev > 0.0)) {
      std::cerr << "warning: channel " << c
                << " is constant; using unit standard deviation\n";
      stddev = 1.0;
    }
    stats.mean[c] = mean;
    stats.stddev[c] = stddev;
  }
  return stats;
}

namespace {

void CheckStats(const Image& image, const NormStats& stats) {
  if (stats.channels() != image.channels()) {
    throw ShapeError("normalisation stats have " +
                     std::to_string(stats.channels()) +
                     " channels, image has " +
                     std::to_string(image.channels()));
  }
}

}  // namespace

Image Normalize(const Image& image, const NormStats& stats) {
  CheckStats(image, stats);
  Image out = image;
  const int channels = image.channels();
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int c = static_cast<int>(i % channels);
    data[i] = (data[i] - stats.mean[c]) / stats.stddev[c];
  }
  return out;
}

Image Denormalize(const Image& image, const NormStats& stats) {
  CheckStats(image, stats);
  Image out = image;
  const int channels = image.channels();
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int c = static_cast<int>(i % channels);
    data[i] = data[i] * stats.stddev[c] + stats.mean[c];
  }
  return out;
}

namespace {

double AxisCoordinate(int index, int length) {
  if (length == 1) return 0.0;
  return static_cast<double>(index) / (length - 1) - 0.5;
}

}  // namespace

Image CoordinateChannels(int height, int width) {
  Image out(height, width, 2);
  for (int y = 0; y < height; ++y) {
    const double cy = AxisCoordinate(y, height);
    for (int x = 0; x < width; ++x) {
      out.at(y, x, 0) = AxisCoordinate(x, width);
      out.at(y, x, 1) = cy;
    }
  }
  return out;
}

double CubicKernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  int index[4];
  double weight[4];
};

// Interpolation taps for every output index along one axis.
std::vector<Taps> AxisTaps(int source_len, int d) {
  std::vector<Taps> taps(static_cast<std::size_t>(source_len) * d);
  for (int n = 0; n < source_len * d; ++n) {
    const double u = (n + 0.5) / d - 0.5;
    const int base = static_cast<int>(std::floor(u));
    Taps& t = taps[n];
    for (int k = 0; k < 4; ++k) {
      const int i = base - 1 + k;
      t.index[k] = std::clamp(i, 0, source_len - 1);
      t.weight[k] = CubicKernel(u - i);
    }
  }
  return taps;
}

}  // namespace

TargetImage BicubicUpsample(const SourceImage& source,
                            UpsamplingFactor factor) {
  const int d = factor.value();
  const int channels = source.channels();
  const auto row_taps = AxisTaps(source.height(), d);
  const auto col_taps = AxisTaps(source.width(), d);

  // Horizontal pass: M_h x N_w.
  Image horizontal(source.height(), source.width() * d, channels);
  for (int y = 0; y < source.height(); ++y) {
    for (int x = 0; x < horizontal.width(); ++x) {
      const Taps& t = col_taps[x];
      for (int c = 0; c < channels; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += t.weight[k] * source.at(y, t.index[k], c);
        horizontal.at(y, x, c) = v;
      }
    }
  }
  TargetImage out(source.height() * d, source.width() * d, channels);
  for (int y = 0; y < out.height(); ++y) {
    const Taps& t = row_taps[y];
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += t.weight[k] * horizontal.at(t.index[k], x, c);
        out.at(y, x, c) = v;
      }
    }
  }
  return out;
}

Image BoxMean(const Image& image, int radius) {
  if (radius < 0) throw ArgumentError("box radius must be non-negative");
  const int h = image.height();
  const int w = image.width();
  const int channels = image.channels();
  // (h+1) x (w+1) integral image per channel.
  std::vector<double> integral(static_cast<std::size_t>(h + 1) * (w + 1) *
                               channels, 0.0);
  auto at = [&](int y, int x, int c) -> double& {
    return integral[(static_cast<std::size_t>(y) * (w + 1) + x) * channels + c];
  };
  for (int y = 0; y < h; ++y) {
    for (int c = 0; c < channels; ++c) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += image.at(y, x, c);
        at(y + 1, x + 1, c) = at(y, x + 1, c) + row;
      }
    }
  }
  Image out(h, w, channels);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(h, y + radius + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w, x + radius + 1);
      const double count = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int c = 0; c < channels; ++c) {
        const double sum =
            at(y1, x1, c) - at(y0, x1, c) - at(y1, x0, c) + at(y0, x0, c);
        out.at(y, x, c) = sum / count;
      }
    }
  }
  return out;
}

TargetImage GuidedFilter(const Image& guide_gray, const TargetImage& input,
                         int radius, double eps) {
  if (guide_gray.channels() != 1 || input.channels() != 1) {
    throw ShapeError("guided filter expects single-channel guide and input");
  }
  if (guide_gray.height() != input.height() ||
      guide_gray.width() != input.width()) {
    throw DimensionError("guided filter guide and input sizes differ");
  }
  if (radius < 1) throw ArgumentError("guided filter radius must be >= 1");
  if (eps < 0.0) throw ArgumentError("guided filter eps must be >= 0");

  const int h = input.height();
  const int w = input.width();
  // Packed channels: I, p, I*I, I*p so one integral image pass covers all.
  Image packed(h, w, 4);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double i = guide_gray.at(y, x);
      const double p = input.at(y, x);
      packed.at(y, x, 0) = i;
      packed.at(y, x, 1) = p;
      packed.at(y, x, 2) = i * i;
      packed.at(y, x, 3) = i * p;
    }
  }
  const Image means = BoxMean(packed, radius);

  Image coeffs(h, w, 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double mean_i = means.at(y, x, 0);
      const double mean_p = means.at(y, x, 1);
      const double var_i = means.at(y, x, 2) - mean_i * mean_i;
      const double cov_ip = means.at(y, x, 3) - mean_i * mean_p;
      const double denom = var_i + eps;
      const double a = denom > 0.0 ? cov_ip / denom : 0.0;
      coeffs.at(y, x, 0) = a;
      coeffs.at(y, x, 1) = mean_p - a * mean_i;
    }
  }
  const Image mean_coeffs = BoxMean(coeffs, radius);

  TargetImage out(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(y, x) = mean_coeffs.at(y, x, 0) * guide_gray.at(y, x) +
                     mean_coeffs.at(y, x, 1);
    }
  }
  return out;
}

TargetImage GuidedFilterBaseline(const SourceImage& source,
                                 const GuideImage& guide,
                                 const GuidedFilterBaselineOptions& options) {
  const UpsamplingFactor factor = InferFactor(source, guide);
  const TargetImage upsampled = BicubicUpsample(source, factor);
  const Image gray = guide.ChannelMean();
  const Image gray_norm = Normalize(gray, ComputeNormStats(gray));
  const int radius = options.radius > 0 ? options.radius : factor.value();
  return GuidedFilter(gray_norm, upsampled, radius, options.eps);
}

}  // namespace pixsr
