#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace dermo {

enum class ColorSpace { RGB, HSV, RGBHSV6, GRAY };

std::string_view to_string(ColorSpace cs);
ColorSpace colorspace_from_string(std::string_view s);
int channel_count(ColorSpace cs);

/// Planar multi-channel raster. Plane c, row y, column x lives at
/// values[(c * height + y) * width + x].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int width, int height, ColorSpace cs);
  ImageTensor(int width, int height, ColorSpace cs, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  ColorSpace colorspace() const noexcept { return colorspace_; }
  std::size_t pixel_count() const noexcept { return std::size_t(width_) * height_; }
  bool empty() const noexcept { return values_.empty(); }

  double& at(int c, int y, int x) { return values_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return values_[index(c, y, x)]; }

  std::span<double> plane(int c);
  std::span<const double> plane(int c) const;
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (std::size_t(c) * height_ + y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  ColorSpace colorspace_ = ColorSpace::RGB;
  std::vector<double> values_;
};

/// Single-channel 8-bit raster. 0 is background, 255 is lesion.
class MaskImage {
 public:
  MaskImage() = default;
  MaskImage(int width, int height, std::uint8_t fill = 0);
  MaskImage(int width, int height, std::vector<std::uint8_t> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return values_.size(); }

  std::uint8_t& at(int y, int x) { return values_[std::size_t(y) * width_ + x]; }
  std::uint8_t at(int y, int x) const { return values_[std::size_t(y) * width_ + x]; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  std::span<std::uint8_t> values() noexcept { return values_; }

  /// True when every pixel is 0 or 255.
  bool is_binary() const noexcept;

  bool operator==(const MaskImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> values_;
};

/// Half-open pixel box: [x0, x1) x [y0, y1).
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool operator==(const BoundingBox&) const = default;
};

inline constexpr std::uint8_t kMaskThreshold = 128;

// --- codecs -----------------------------------------------------------------

/// Decodes 8-bit RGB PNG or binary PPM (P6) bytes into an RGB tensor in [0, 1].
ImageTensor decode_image(std::span<const std::uint8_t> bytes);
/// Decodes an 8-bit grayscale PNG or binary PGM (P5) into a mask. Color PNGs
/// are reduced to luminance by libpng.
MaskImage decode_mask(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_mask_png(const MaskImage& mask);
/// Writes an RGB (or GRAY) tensor as 8-bit PNG, clamping to [0, 1].
std::vector<std::uint8_t> encode_image_png(const ImageTensor& img);

ImageTensor read_image(const std::filesystem::path& path);
MaskImage read_mask(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const MaskImage& mask);
void write_image_png(const std::filesystem::path& path, const ImageTensor& img);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// --- color ------------------------------------------------------------------

/// Hexcone HSV; H scaled to [0, 1), hue of achromatic pixels is 0.
ImageTensor rgb_to_hsv(const ImageTensor& rgb);
/// R, G, B, H, S, V planes.
ImageTensor six_channel(const ImageTensor& rgb);
/// 0.299 R + 0.587 G + 0.114 B.
ImageTensor to_gray(const ImageTensor& rgb);

// --- geometry / normalization -----------------------------------------------

/// Bilinear resampling, half-pixel centers, edge clamping.
ImageTensor resize_bilinear(const ImageTensor& img, int width, int height);
MaskImage resize_nearest(const MaskImage& mask, int width, int height);

/// Per-channel zero mean, unit population standard deviation. Constant
/// channels become all zeros.
ImageTensor standardize(const ImageTensor& img);

/// Smallest box holding every pixel >= threshold. Throws EmptyMaskError.
BoundingBox mask_bbox(const MaskImage& mask, std::uint8_t threshold = kMaskThreshold);

ImageTensor crop(const ImageTensor& img, const BoundingBox& box);
MaskImage crop(const MaskImage& mask, const BoundingBox& box);

/// v -> (v / 255 - 0.5) * 1.9, row-major.
std::vector<double> normalize_mask(const MaskImage& mask);
/// Exact inverse of normalize_mask, clamped to [0, 255] and rounded.
MaskImage denormalize_mask(std::span<const double> values, int width, int height);

}  // namespace dermo
