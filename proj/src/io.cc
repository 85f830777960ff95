#include "pixsr/io.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pixsr/errors.h"

namespace pixsr {

ImageFormat FormatFromPath(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pfm") return ImageFormat::kPfm;
  if (ext == ".png") return ImageFormat::kPng;
  throw FormatError("cannot infer image format from '" + path.string() + "'");
}

namespace {

// ---------------------------------------------------------------- PFM

std::string ReadToken(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      while (in.get(c) && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) {
      token.push_back(c);
      break;
    }
  }
  while (in.get(c)) {
    if (std::isspace(static_cast<unsigned char>(c))) break;
    token.push_back(c);
  }
  return token;
}

Image ReadPfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = ReadToken(in);
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw FormatError(path.string() + ": not a PFM file");
  }
  int width = 0;
  int height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(ReadToken(in));
    height = std::stoi(ReadToken(in));
    scale = std::stod(ReadToken(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PFM header");
  }
  if (width < 1 || height < 1 || scale == 0.0 || !std::isfinite(scale)) {
    throw FormatError(path.string() + ": invalid PFM header values");
  }
  // The single whitespace after the scale token has been consumed.
  const bool little = scale < 0.0;
  const std::size_t count =
      static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw IoError(path.string() + ": truncated PFM data");
  }
  const bool swap = little != (std::endian::native == std::endian::little);
  Image image(height, width, channels);
  std::size_t pos = 0;
  for (int row = height - 1; row >= 0; --row) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c, pos += 4) {
        unsigned char bytes[4];
        std::memcpy(bytes, raw.data() + pos, 4);
        if (swap) std::reverse(bytes, bytes + 4);
        float v;
        std::memcpy(&v, bytes, 4);
        image.at(row, x, c) = v;
      }
    }
  }
  return image;
}

void WritePfm(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw FormatError("PFM supports 1 or 3 channels, image has " +
                      std::to_string(image.channels()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << (image.channels() == 1 ? "Pf" : "PF") << '\n'
      << image.width() << ' ' << image.height() << '\n'
      << "-1.0\n";
  std::vector<unsigned char> raw(image.data().size() * 4);
  std::size_t pos = 0;
  for (int row = image.height() - 1; row >= 0; --row) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c, pos += 4) {
        const float v = static_cast<float>(image.at(row, x, c));
        unsigned char bytes[4];
        std::memcpy(bytes, &v, 4);
        if constexpr (std::endian::native == std::endian::big) {
          std::reverse(bytes, bytes + 4);
        }
        std::memcpy(raw.data() + pos, bytes, 4);
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------- PNG

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void PngWarning(png_structp, png_const_charp message) {
  std::cerr << "warning: libpng: " << message << '\n';
}

Image ReadPng(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, PngWarning);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }
  // Everything that must survive a longjmp lives outside this frame's
  // automatic C++ objects created after setjmp.
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
  bool had_alpha = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": corrupt or truncated PNG");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr,
               nullptr, nullptr);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16 && std::endian::native == std::endian::little) {
    png_set_swap(png);
  }
  png_read_update_info(png, info);
  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  color_type = png_get_color_type(png, info);
  had_alpha = (color_type & PNG_COLOR_MASK_ALPHA) != 0;

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int kept = had_alpha ? channels - 1 : channels;
  if (had_alpha) {
    std::cerr << "warning: " << path.string()
              << ": dropping alpha channel\n";
  }
  Image image(static_cast<int>(height), static_cast<int>(width), kept);
  const int bytes = bit_depth == 16 ? 2 : 1;
  for (png_uint_32 y = 0; y < height; ++y) {
    const unsigned char* row = rows[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      for (int c = 0; c < kept; ++c) {
        const unsigned char* s = row + (x * channels + c) * bytes;
        double v;
        if (bytes == 2) {
          std::uint16_t q;
          std::memcpy(&q, s, 2);
          v = q;
        } else {
          v = *s;
        }
        image.at(static_cast<int>(y), static_cast<int>(x), c) = v;
      }
    }
  }
  return image;
}

std::filesystem::path MappingPath(const std::filesystem::path& image_path) {
  return std::filesystem::path(image_path.string() + ".map");
}

void WritePng(const std::filesystem::path& path, const Image& image,
              const PngWriteOptions& options) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw FormatError("PNG output supports 1 or 3 channels, image has " +
                      std::to_string(image.channels()));
  }
  if (options.bit_depth != 8 && options.bit_depth != 16) {
    throw FormatError("PNG bit depth must be 8 or 16");
  }
  const double max_q = options.bit_depth == 16 ? 65535.0 : 255.0;
  PngSampleMapping mapping{0.0, 1.0, options.bit_depth};
  if (options.mapping == PngMapping::kMinMax) {
    const auto data = image.data();
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    mapping.offset = *lo;
    mapping.scale = *hi > *lo ? (*hi - *lo) / max_q : 1.0;
  }

  const int w = image.width();
  const int h = image.height();
  const int channels = image.channels();
  const int bytes = options.bit_depth / 8;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(w) * h *
                                    channels * bytes);
  std::size_t pos = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const double q = std::clamp(
            std::round((image.at(y, x, c) - mapping.offset) / mapping.scale),
            0.0, max_q);
        const auto value = static_cast<std::uint32_t>(q);
        if (bytes == 2) {
          pixels[pos++] = static_cast<unsigned char>(value >> 8);
          pixels[pos++] = static_cast<unsigned char>(value & 0xff);
        } else {
          pixels[pos++] = static_cast<unsigned char>(value);
        }
      }
    }
  }

  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, PngWarning);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_bytep> rows(h);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * channels * bytes;
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + y * row_bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, w, h, options.bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  std::ofstream side(MappingPath(path));
  if (!side) throw IoError("cannot write " + MappingPath(path).string());
  side << std::setprecision(17) << "offset=" << mapping.offset << '\n'
       << "scale=" << mapping.scale << '\n'
       << "bit_depth=" << mapping.bit_depth << '\n';
}

}  // namespace

Image ReadImage(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path.string());
  unsigned char signature[8] = {};
  probe.read(reinterpret_cast<char*>(signature), 8);
  const auto got = probe.gcount();
  probe.close();
  if (got >= 8 && png_sig_cmp(signature, 0, 8) == 0) return ReadPng(path);
  if (got >= 2 && signature[0] == 'P' &&
      (signature[1] == 'f' || signature[1] == 'F')) {
    return ReadPfm(path);
  }
  if (got == 0) throw IoError(path.string() + ": empty file");
  throw FormatError(path.string() + ": unknown image format");
}

void WriteImage(const std::filesystem::path& path, const Image& image,
                ImageFormat format, const PngWriteOptions& png_options) {
  if (image.empty()) throw ArgumentError("cannot write an empty image");
  if (format == ImageFormat::kPfm) {
    WritePfm(path, image);
  } else {
    WritePng(path, image, png_options);
  }
}

void WriteImage(const std::filesystem::path& path, const Image& image) {
  WriteImage(path, image, FormatFromPath(path));
}

PngSampleMapping ReadPngMapping(const std::filesystem::path& image_path) {
  std::ifstream in(MappingPath(image_path));
  if (!in) throw IoError("no sample mapping next to " + image_path.string());
  PngSampleMapping mapping;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "offset") mapping.offset = std::stod(value);
      if (key == "scale") mapping.scale = std::stod(value);
      if (key == "bit_depth") mapping.bit_depth = std::stoi(value);
    } catch (const std::exception&) {
      throw FormatError("malformed sample mapping line: " + line);
    }
  }
  return mapping;
}

}  // namespace pixsr
