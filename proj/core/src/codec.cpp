#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dermo/errors.hpp"
#include "dermo/imaging.hpp"

namespace dermo {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && std::memcmp(b.data(), kPngSignature, 8) == 0;
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

// libpng reports failures without positions, so walk the chunk layout first
// to locate truncation.
void check_png_chunks(std::span<const std::uint8_t> b) {
  std::size_t off = 8;
  while (off + 8 <= b.size()) {
    const std::uint32_t len = read_be32(b.data() + off);
    const std::string type(reinterpret_cast<const char*>(b.data() + off + 4), 4);
    if (off + 12 + std::size_t(len) > b.size()) {
      throw DecodeError(off, "PNG chunk '" + type + "' declares " + std::to_string(len) +
                                 " bytes past end of data");
    }
    if (type == "IEND") return;
    off += 12 + std::size_t(len);
  }
  throw DecodeError(off, "PNG data ends before IEND chunk");
}

struct PngPixels {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

PngPixels decode_png(std::span<const std::uint8_t> bytes, std::uint32_t format) {
  check_png_chunks(bytes);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DecodeError(8, std::string("PNG header: ") + image.message);
  }
  image.format = format;
  PngPixels out;
  out.width = int(image.width);
  out.height = int(image.height);
  out.data.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError(8, "PNG payload: " + msg);
  }
  return out;
}

struct NetpbmHeader {
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

// Parses "P5"/"P6" headers with maxval 255.
NetpbmHeader parse_netpbm(std::span<const std::uint8_t> b, char kind) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != std::uint8_t(kind)) {
    throw DecodeError(0, std::string("expected P") + kind + " magic");
  }
  std::size_t off = 2;
  auto skip_space = [&] {
    while (off < b.size()) {
      if (b[off] == '#') {
        while (off < b.size() && b[off] != '\n') ++off;
      } else if (std::isspace(b[off])) {
        ++off;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* field) {
    skip_space();
    const std::size_t start = off;
    long value = 0;
    while (off < b.size() && std::isdigit(b[off])) {
      value = value * 10 + (b[off] - '0');
      if (value > 1'000'000) throw DecodeError(start, std::string(field) + " too large");
      ++off;
    }
    if (off == start) throw DecodeError(start, std::string("missing ") + field);
    return int(value);
  };
  NetpbmHeader h;
  h.width = read_int("width");
  h.height = read_int("height");
  const std::size_t maxval_at = off;
  const int maxval = read_int("maxval");
  if (maxval != 255) throw DecodeError(maxval_at, "only maxval 255 is supported");
  if (off >= b.size() || !std::isspace(b[off])) {
    throw DecodeError(off, "expected whitespace after maxval");
  }
  h.data_offset = off + 1;
  if (h.width <= 0 || h.height <= 0) throw DecodeError(2, "zero image dimension");
  return h;
}

}  // namespace

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) {
    const PngPixels px = decode_png(bytes, PNG_FORMAT_RGB);
    ImageTensor img(px.width, px.height, ColorSpace::RGB);
    for (int y = 0; y < px.height; ++y)
      for (int x = 0; x < px.width; ++x)
        for (int c = 0; c < 3; ++c)
          img.at(c, y, x) = px.data[(std::size_t(y) * px.width + x) * 3 + c] / 255.0;
    return img;
  }
  const NetpbmHeader h = parse_netpbm(bytes, '6');
  const std::size_t need = std::size_t(h.width) * h.height * 3;
  if (bytes.size() - h.data_offset < need) {
    throw DecodeError(bytes.size(), "truncated P6 payload: expected " + std::to_string(need) +
                                        " bytes, got " +
                                        std::to_string(bytes.size() - h.data_offset));
  }
  ImageTensor img(h.width, h.height, ColorSpace::RGB);
  const std::uint8_t* p = bytes.data() + h.data_offset;
  for (int y = 0; y < h.height; ++y)
    for (int x = 0; x < h.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = *p++ / 255.0;
  return img;
}

MaskImage decode_mask(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) {
    PngPixels px = decode_png(bytes, PNG_FORMAT_GRAY);
    return MaskImage(px.width, px.height, std::move(px.data));
  }
  const NetpbmHeader h = parse_netpbm(bytes, '5');
  const std::size_t need = std::size_t(h.width) * h.height;
  if (bytes.size() - h.data_offset < need) {
    throw DecodeError(bytes.size(), "truncated P5 payload");
  }
  const auto first = bytes.begin() + std::ptrdiff_t(h.data_offset);
  return MaskImage(h.width, h.height, std::vector<std::uint8_t>(first, first + std::ptrdiff_t(need)));
}

namespace {

std::vector<std::uint8_t> write_png(const std::uint8_t* pixels, int width, int height,
                                    std::uint32_t format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(width);
  image.height = png_uint_32(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw Error(std::string("PNG encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw Error(std::string("PNG encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_mask_png(const MaskImage& mask) {
  detail::require(mask.pixel_count() > 0, "cannot encode an empty mask");
  return write_png(mask.values().data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> encode_image_png(const ImageTensor& img) {
  detail::require(img.colorspace() == ColorSpace::RGB || img.colorspace() == ColorSpace::GRAY,
                  "PNG output needs an RGB or GRAY tensor");
  const int ch = img.channels();
  std::vector<std::uint8_t> px(img.pixel_count() * std::size_t(ch));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < ch; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        px[(std::size_t(y) * img.width() + x) * ch + c] = std::uint8_t(std::lround(v * 255.0));
      }
  return write_png(px.data(), img.width(), img.height(),
                   ch == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageTensor read_image(const std::filesystem::path& path) {
  return decode_image(read_file_bytes(path));
}

MaskImage read_mask(const std::filesystem::path& path) { return decode_mask(read_file_bytes(path)); }

namespace {
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}
}  // namespace

void write_mask_png(const std::filesystem::path& path, const MaskImage& mask) {
  write_bytes(path, encode_mask_png(mask));
}

void write_image_png(const std::filesystem::path& path, const ImageTensor& img) {
  write_bytes(path, encode_image_png(img));
}

}  // namespace dermo
