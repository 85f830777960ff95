#include "pixsr/image.h"

#include <cmath>
#include <string>

#include "pixsr/errors.h"

namespace pixsr {

DivergenceError::DivergenceError(int iteration, double loss)
    : std::runtime_error("non-finite objective " + std::to_string(loss) +
                         " at iteration " + std::to_string(iteration)),
      iteration_(iteration),
      loss_(loss) {}

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw DimensionError("image dimensions must be positive, got " +
                         std::to_string(height) + "x" + std::to_string(width) +
                         "x" + std::to_string(channels));
  }
  data_.assign(pixel_count() * channels_, fill);
}

Image Image::Channel(int c) const {
  if (c < 0 || c >= channels_) {
    throw ShapeError("channel index " + std::to_string(c) + " out of range");
  }
  Image out(height_, width_, 1);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    out.data_[i] = data_[i * channels_ + c];
  }
  return out;
}

Image Image::ChannelMean() const {
  Image out(height_, width_, 1);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    double sum = 0.0;
    for (int c = 0; c < channels_; ++c) sum += data_[i * channels_ + c];
    out.data_[i] = sum / channels_;
  }
  return out;
}

bool Image::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

UpsamplingFactor::UpsamplingFactor(int value) : value_(value) {
  if (value < 1) {
    throw DimensionError("upsampling factor must be >= 1, got " +
                         std::to_string(value));
  }
}

UpsamplingFactor InferFactor(const Image& source, const Image& guide) {
  if (source.empty() || guide.empty()) {
    throw DimensionError("cannot infer upsampling factor from an empty image");
  }
  const int fy = guide.height() / source.height();
  const int fx = guide.width() / source.width();
  if (fy < 1 || fy != fx || fy * source.height() != guide.height() ||
      fx * source.width() != guide.width()) {
    throw DimensionError(
        "guide size " + std::to_string(guide.height()) + "x" +
        std::to_string(guide.width()) +
        " is not an integer multiple of source size " +
        std::to_string(source.height()) + "x" + std::to_string(source.width()));
  }
  return UpsamplingFactor(fy);
}

}  // namespace pixsr
