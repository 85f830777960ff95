#ifndef PIXSR_IO_H_
#define PIXSR_IO_H_

#include <filesystem>

#include "pixsr/image.h"

namespace pixsr {

enum class ImageFormat { kPfm, kPng };

// Picks the format from the extension (.pfm / .png); throws FormatError
// otherwise.
ImageFormat FormatFromPath(const std::filesystem::path& path);

// Reads PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette; alpha dropped
// with a warning) or PFM ("Pf" gray / "PF" RGB). The format is detected from
// the file signature. PNG samples are returned as their integer values.
// Throws IoError for missing/truncated files, FormatError otherwise.
Image ReadImage(const std::filesystem::path& path);

enum class PngMapping {
  kMinMax,    // linear map of [min, max] onto the full integer range
  kIdentity,  // round and clamp the values themselves
};

struct PngWriteOptions {
  int bit_depth = 16;  // 8 or 16
  PngMapping mapping = PngMapping::kMinMax;
};

// Stored sample q decodes to offset + scale * q.
struct PngSampleMapping {
  double offset = 0.0;
  double scale = 1.0;
  int bit_depth = 16;
};

// PFM output is bit-exact for values representable as float32 (little-endian
// data, rows bottom-to-top). PNG output writes the sample mapping next to the
// image as "<path>.map" ("offset=..", "scale=..", "bit_depth=..").
// Only 1- and 3-channel images can be written.
void WriteImage(const std::filesystem::path& path, const Image& image,
                ImageFormat format, const PngWriteOptions& png_options = {});
void WriteImage(const std::filesystem::path& path, const Image& image);

PngSampleMapping ReadPngMapping(const std::filesystem::path& image_path);

}  // namespace pixsr

#endif  // PIXSR_IO_H_
