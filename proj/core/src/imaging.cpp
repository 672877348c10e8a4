#include "dermo/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dermo/errors.hpp"

namespace dermo {

std::string_view to_string(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::RGB: return "RGB";
    case ColorSpace::HSV: return "HSV";
    case ColorSpace::RGBHSV6: return "RGBHSV6";
    case ColorSpace::GRAY: return "GRAY";
  }
  return "?";
}

ColorSpace colorspace_from_string(std::string_view s) {
  if (s == "RGB") return ColorSpace::RGB;
  if (s == "HSV") return ColorSpace::HSV;
  if (s == "RGBHSV6") return ColorSpace::RGBHSV6;
  if (s == "GRAY") return ColorSpace::GRAY;
  throw ValidationError("unknown colorspace '" + std::string(s) + "'");
}

int channel_count(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::RGB:
    case ColorSpace::HSV: return 3;
    case ColorSpace::RGBHSV6: return 6;
    case ColorSpace::GRAY: return 1;
  }
  return 0;
}

ImageTensor::ImageTensor(int width, int height, ColorSpace cs)
    : width_(width), height_(height), channels_(channel_count(cs)), colorspace_(cs) {
  detail::require(width > 0 && height > 0, "image dimensions must be positive");
  values_.assign(std::size_t(width) * height * channels_, 0.0);
}

ImageTensor::ImageTensor(int width, int height, ColorSpace cs, std::vector<double> values)
    : width_(width), height_(height), channels_(channel_count(cs)), colorspace_(cs),
      values_(std::move(values)) {
  detail::require(width > 0 && height > 0, "image dimensions must be positive");
  detail::require(values_.size() == std::size_t(width) * height * channels_,
                  "values length must equal width * height * channels");
}

std::span<double> ImageTensor::plane(int c) {
  return std::span<double>(values_).subspan(std::size_t(c) * pixel_count(), pixel_count());
}

std::span<const double> ImageTensor::plane(int c) const {
  return std::span<const double>(values_).subspan(std::size_t(c) * pixel_count(), pixel_count());
}

MaskImage::MaskImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height), values_(std::size_t(width) * height, fill) {
  detail::require(width > 0 && height > 0, "mask dimensions must be positive");
}

MaskImage::MaskImage(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  detail::require(width > 0 && height > 0, "mask dimensions must be positive");
  detail::require(values_.size() == std::size_t(width) * height,
                  "mask values length must equal width * height");
}

bool MaskImage::is_binary() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](std::uint8_t v) { return v == 0 || v == 255; });
}

ImageTensor rgb_to_hsv(const ImageTensor& rgb) {
  detail::require(rgb.colorspace() == ColorSpace::RGB && rgb.channels() == 3,
                  "rgb_to_hsv needs a 3-channel RGB image");
  ImageTensor hsv(rgb.width(), rgb.height(), ColorSpace::HSV);
  const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  auto h = hsv.plane(0), s = hsv.plane(1), v = hsv.plane(2);
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    const double mx = std::max({r[i], g[i], b[i]});
    const double mn = std::min({r[i], g[i], b[i]});
    const double delta = mx - mn;
    v[i] = mx;
    s[i] = mx > 0.0 ? delta / mx : 0.0;
    double hue = 0.0;
    if (delta > 0.0) {
      if (mx == r[i]) {
        hue = (g[i] - b[i]) / delta;
      } else if (mx == g[i]) {
        hue = (b[i] - r[i]) / delta + 2.0;
      } else {
        hue = (r[i] - g[i]) / delta + 4.0;
      }
      hue /= 6.0;
      if (hue < 0.0) hue += 1.0;
      if (hue >= 1.0) hue -= 1.0;
    }
    h[i] = hue;
  }
  return hsv;
}

ImageTensor six_channel(const ImageTensor& rgb) {
  detail::require(rgb.colorspace() == ColorSpace::RGB, "six_channel needs an RGB image");
  const ImageTensor hsv = rgb_to_hsv(rgb);
  std::vector<double> values;
  values.reserve(rgb.values().size() * 2);
  values.insert(values.end(), rgb.values().begin(), rgb.values().end());
  values.insert(values.end(), hsv.values().begin(), hsv.values().end());
  return ImageTensor(rgb.width(), rgb.height(), ColorSpace::RGBHSV6, std::move(values));
}

ImageTensor to_gray(const ImageTensor& rgb) {
  detail::require(rgb.colorspace() == ColorSpace::RGB, "to_gray needs an RGB image");
  ImageTensor gray(rgb.width(), rgb.height(), ColorSpace::GRAY);
  const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  auto out = gray.plane(0);
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i)
    out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return gray;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double t;
};

// Source taps for one output coordinate under the half-pixel-center rule.
Tap bilinear_tap(int dst, int dst_size, int src_size) {
  double s = (dst + 0.5) * double(src_size) / double(dst_size) - 0.5;
  s = std::clamp(s, 0.0, double(src_size - 1));
  const int lo = int(std::floor(s));
  const int hi = std::min(lo + 1, src_size - 1);
  return {lo, hi, s - lo};
}

}  // namespace

ImageTensor resize_bilinear(const ImageTensor& img, int width, int height) {
  detail::require(width >= 1 && height >= 1, "resize target must be at least 1x1");
  detail::require(!img.empty(), "cannot resize an empty image");
  if (width == img.width() && height == img.height()) return img;
  ImageTensor out(width, height, img.colorspace());
  std::vector<Tap> xs(width), ys(height);
  for (int x = 0; x < width; ++x) xs[x] = bilinear_tap(x, width, img.width());
  for (int y = 0; y < height; ++y) ys[y] = bilinear_tap(y, height, img.height());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const Tap ty = ys[y];
      for (int x = 0; x < width; ++x) {
        const Tap tx = xs[x];
        // std::lerp returns the endpoint exactly when both ends agree, so flat regions stay flat.
        const double top = std::lerp(img.at(c, ty.lo, tx.lo), img.at(c, ty.lo, tx.hi), tx.t);
        const double bot = std::lerp(img.at(c, ty.hi, tx.lo), img.at(c, ty.hi, tx.hi), tx.t);
        out.at(c, y, x) = std::lerp(top, bot, ty.t);
      }
    }
  }
  return out;
}

MaskImage resize_nearest(const MaskImage& mask, int width, int height) {
  detail::require(width >= 1 && height >= 1, "resize target must be at least 1x1");
  MaskImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(int((y + 0.5) * mask.height() / height), mask.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(int((x + 0.5) * mask.width() / width), mask.width() - 1);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

ImageTensor standardize(const ImageTensor& img) {
  detail::require(img.pixel_count() >= 2, "standardize needs at least 2 pixels per channel");
  ImageTensor out = img;
  const double n = double(img.pixel_count());
  for (int c = 0; c < img.channels(); ++c) {
    auto p = out.plane(c);
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : p) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / n);
    if (sd < 1e-12) sd = 1.0;
    for (double& v : p) v = (v - mean) / sd;
  }
  return out;
}

BoundingBox mask_bbox(const MaskImage& mask, std::uint8_t threshold) {
  BoundingBox box{mask.width(), mask.height(), 0, 0};
  bool any = false;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(y, x) < threshold) continue;
      any = true;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
    }
  }
  if (!any) throw EmptyMaskError();
  return box;
}

namespace {
void check_box(const BoundingBox& b, int width, int height) {
  detail::require(b.x0 >= 0 && b.y0 >= 0 && b.x0 < b.x1 && b.y0 < b.y1 && b.x1 <= width &&
                      b.y1 <= height,
                  "bounding box outside image bounds");
}
}  // namespace

ImageTensor crop(const ImageTensor& img, const BoundingBox& box) {
  check_box(box, img.width(), img.height());
  ImageTensor out(box.width(), box.height(), img.colorspace());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < box.height(); ++y)
      for (int x = 0; x < box.width(); ++x) out.at(c, y, x) = img.at(c, box.y0 + y, box.x0 + x);
  return out;
}

MaskImage crop(const MaskImage& mask, const BoundingBox& box) {
  check_box(box, mask.width(), mask.height());
  MaskImage out(box.width(), box.height());
  for (int y = 0; y < box.height(); ++y)
    for (int x = 0; x < box.width(); ++x) out.at(y, x) = mask.at(box.y0 + y, box.x0 + x);
  return out;
}

std::vector<double> normalize_mask(const MaskImage& mask) {
  std::vector<double> out(mask.pixel_count());
  const auto v = mask.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (v[i] / 255.0 - 0.5) * 1.9;
  return out;
}

MaskImage denormalize_mask(std::span<const double> values, int width, int height) {
  detail::require(values.size() == std::size_t(width) * height,
                  "value count must equal width * height");
  std::vector<std::uint8_t> px(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = (values[i] / 1.9 + 0.5) * 255.0;
    px[i] = std::uint8_t(std::lround(std::clamp(v, 0.0, 255.0)));
  }
  return MaskImage(width, height, std::move(px));
}

}  // namespace dermo
