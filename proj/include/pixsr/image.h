#ifndef PIXSR_IMAGE_H_
#define PIXSR_IMAGE_H_

#include <cstddef>
#include <span>
#include <vector>

namespace pixsr {

// Dense H x W x C grid of doubles, stored row-major with channels
// interleaved (index = (y * width + x) * channels + c).
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels = 1, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[Index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[Index(y, x, c)]; }

  std::span<double> pixel(int y, int x) {
    return {data_.data() + Index(y, x, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int y, int x) const {
    return {data_.data() + Index(y, x, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Copy of a single channel as a one-channel image.
  Image Channel(int c) const;
  // Mean over channels, one-channel result.
  Image ChannelMean() const;

  bool SameShape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  bool AllFinite() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t Index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// High-resolution guide G (N x N x C).
using GuideImage = Image;
// Low-resolution source S (M x M), one channel.
using SourceImage = Image;
// High-resolution target T or estimate T^ (N x N), one channel.
using TargetImage = Image;

// Integer ratio between target and source resolution. Each source pixel
// covers a value x value block of target pixels.
class UpsamplingFactor {
 public:
  explicit UpsamplingFactor(int value);
  int value() const { return value_; }
  int block_pixels() const { return value_ * value_; }

 private:
  int value_;
};

// Returns D such that guide dims == D * source dims on both axes, or throws
// DimensionError.
UpsamplingFactor InferFactor(const Image& source, const Image& guide);

}  // namespace pixsr

#endif  // PIXSR_IMAGE_H_
