#include "dermo/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "dermo/errors.hpp"

namespace dermo::features {
namespace {

constexpr double kAchromaticCut = 0.1;
const double kMaxSobel = 4.0 * std::numbers::sqrt2;

void l1_normalize(std::span<double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum > 0.0)
    for (double& x : v) x /= sum;
}

int quantize(double v, double lo, int bins) {
  const int b = int((v - lo) / (1.0 - lo) * bins);
  return std::clamp(b, 0, bins - 1);
}

std::array<int, 256> build_uniform_table() {
  std::array<int, 256> table{};
  int next = 0;
  for (unsigned code = 0; code < 256; ++code) {
    const auto rotated = std::uint8_t((code << 1) | (code >> 7));
    const int transitions = std::popcount(unsigned(std::uint8_t(code) ^ rotated));
    table[code] = transitions <= 2 ? next++ : kLbpBins - 1;
  }
  return table;
}

const std::array<int, 256>& uniform_table() {
  static const std::array<int, 256> table = build_uniform_table();
  return table;
}

}  // namespace

int color_bin(double h, double s, double v) {
  if (s < kAchromaticCut || v < kAchromaticCut) {
    return 162 + std::clamp(int(v * 4.0), 0, 3);
  }
  const int hb = std::clamp(int(h * 18.0), 0, 17);
  const int sb = quantize(s, kAchromaticCut, 3);
  const int vb = quantize(v, kAchromaticCut, 3);
  return (hb * 3 + sb) * 3 + vb;
}

FeatureVector color_histogram_166(const ImageTensor& rgb) {
  detail::require(!rgb.empty(), "color histogram of an empty image");
  const ImageTensor hsv = rgb_to_hsv(rgb);
  FeatureVector out{kColorHist, std::vector<double>(kColorHistDims, 0.0)};
  const auto h = hsv.plane(0), s = hsv.plane(1), v = hsv.plane(2);
  for (std::size_t i = 0; i < hsv.pixel_count(); ++i) out.values[color_bin(h[i], s[i], v[i])] += 1.0;
  l1_normalize(out.values);
  return out;
}

FeatureVector edge_histogram_64(const ImageTensor& img) {
  detail::require(img.width() >= 3 && img.height() >= 3, "edge histogram needs at least 3x3");
  ImageTensor lum;
  if (img.colorspace() == ColorSpace::RGB) {
    lum = to_gray(img);
  } else {
    detail::require(img.colorspace() == ColorSpace::GRAY, "edge histogram needs RGB or GRAY");
    lum = img;
  }
  auto px = [&](int y, int x) { return lum.at(0, y, x); };
  FeatureVector out{kEdgeHist, std::vector<double>(kEdgeHistDims, 0.0)};
  for (int y = 1; y + 1 < lum.height(); ++y) {
    for (int x = 1; x + 1 < lum.width(); ++x) {
      const double gx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
      const double gy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
      int dir = 0;
      if (gx != 0.0 || gy != 0.0) {
        double theta = std::atan2(gy, gx);
        if (theta < 0.0) theta += std::numbers::pi;
        if (theta >= std::numbers::pi) theta -= std::numbers::pi;
        dir = std::min(int(theta / std::numbers::pi * 8.0), 7);
      }
      const double mag = std::hypot(gx, gy);
      const int mb = std::min(int(mag / kMaxSobel * 8.0), 7);
      out.values[dir * 8 + mb] += 1.0;
    }
  }
  l1_normalize(out.values);
  return out;
}

int lbp_uniform_bin(unsigned code) { return uniform_table()[code & 0xffu]; }

std::array<double, kLbpBins> lbp_histogram(const ImageTensor& img, int channel) {
  detail::require(img.width() >= 3 && img.height() >= 3, "LBP needs at least 3x3");
  detail::require(channel >= 0 && channel < img.channels(), "LBP channel out of range");
  // Circular neighbour order starting east, moving clockwise (y down).
  static constexpr int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  std::array<double, kLbpBins> hist{};
  for (int y = 1; y + 1 < img.height(); ++y) {
    for (int x = 1; x + 1 < img.width(); ++x) {
      const double center = img.at(channel, y, x);
      unsigned code = 0;
      for (int k = 0; k < 8; ++k)
        if (img.at(channel, y + dy[k], x + dx[k]) >= center) code |= 1u << k;
      hist[lbp_uniform_bin(code)] += 1.0;
    }
  }
  return hist;
}

FeatureVector mslbp_236(const ImageTensor& rgb) {
  detail::require(rgb.colorspace() == ColorSpace::RGB, "mslbp needs an RGB image");
  detail::require(rgb.width() >= 3 && rgb.height() >= 3, "mslbp needs at least 3x3");
  const ImageTensor hsv = rgb_to_hsv(rgb);
  FeatureVector out{kMslbp, std::vector<double>(kMslbpDims, 0.0)};
  for (int factor : {1, 2, 4, 8}) {
    const int w = rgb.width() / factor, h = rgb.height() / factor;
    if (w < 3 || h < 3) continue;
    const ImageTensor rgb_s = resize_bilinear(rgb, w, h);
    const ImageTensor hsv_s = resize_bilinear(hsv, w, h);
    const double weight = 1.0 / factor;
    for (int ch = 0; ch < 4; ++ch) {
      const auto hist = ch < 3 ? lbp_histogram(rgb_s, ch) : lbp_histogram(hsv_s, 0);
      double total = 0.0;
      for (double c : hist) total += c;
      for (int b = 0; b < kLbpBins; ++b) out.values[ch * kLbpBins + b] += weight * hist[b] / total;
    }
  }
  for (int ch = 0; ch < 4; ++ch)
    l1_normalize(std::span<double>(out.values).subspan(std::size_t(ch) * kLbpBins, kLbpBins));
  return out;
}

}  // namespace dermo::features
