#include "dermo/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dermo/errors.hpp"
#include "dermo/random.hpp"

namespace dermo::augment {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// cos/sin of an angle in degrees, exact at multiples of 90 so quarter turns
// land on pixel centers.
std::pair<double, double> cos_sin_deg(double deg) {
  const double m = std::fmod(deg, 360.0);
  const double r = m < 0 ? m + 360.0 : m;
  if (r == 0.0) return {1.0, 0.0};
  if (r == 90.0) return {0.0, 1.0};
  if (r == 180.0) return {-1.0, 0.0};
  if (r == 270.0) return {0.0, -1.0};
  const double rad = deg * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

double sample_bilinear(const ImageTensor& img, int c, double sx, double sy) {
  sx = std::clamp(sx, 0.0, double(img.width() - 1));
  sy = std::clamp(sy, 0.0, double(img.height() - 1));
  const int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double tx = sx - x0, ty = sy - y0;
  if (tx == 0.0 && ty == 0.0) return img.at(c, y0, x0);
  const double top = img.at(c, y0, x0) * (1.0 - tx) + img.at(c, y0, x1) * tx;
  const double bot = img.at(c, y1, x0) * (1.0 - tx) + img.at(c, y1, x1) * tx;
  return top * (1.0 - ty) + bot * ty;
}

std::uint8_t sample_nearest(const MaskImage& m, double sx, double sy) {
  const int x = std::clamp(int(std::floor(sx + 0.5)), 0, m.width() - 1);
  const int y = std::clamp(int(std::floor(sy + 0.5)), 0, m.height() - 1);
  return m.at(y, x);
}

void check_mask(const ImageTensor& img, const std::optional<MaskImage>& mask) {
  if (mask) {
    detail::require(mask->width() == img.width() && mask->height() == img.height(),
                    "image and mask dimensions differ");
  }
}

// Resamples image and mask through an output -> source coordinate map.
template <typename Map>
Augmented resample(const ImageTensor& img, const std::optional<MaskImage>& mask, Map&& map) {
  Augmented out{ImageTensor(img.width(), img.height(), img.colorspace()), std::nullopt};
  if (mask) out.mask = MaskImage(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto [sx, sy] = map(double(x), double(y));
      for (int c = 0; c < img.channels(); ++c) out.image.at(c, y, x) = sample_bilinear(img, c, sx, sy);
      if (mask) out.mask->at(y, x) = sample_nearest(*mask, sx, sy);
    }
  }
  return out;
}

struct WarpMap {
  WarpSpec w;
  double width;
  double height;

  std::pair<double, double> operator()(double x, double y) const {
    const double sx = x + w.amp_x * std::sin(kTwoPi * w.freq_x * y / height + w.phase_x);
    const double sy = y + w.amp_y * std::sin(kTwoPi * w.freq_y * x / width + w.phase_y);
    return {sx, sy};
  }
};

void check_params(const AugmentParams& p) {
  detail::require(p.scale > 0.0, "scale must be positive");
  detail::require(p.crop_fraction > 0.0 && p.crop_fraction <= 1.0, "crop_fraction must be in (0, 1]");
  detail::require(p.warp.amp_x >= 0.0 && p.warp.amp_y >= 0.0, "warp amplitudes must be >= 0");
  detail::require(p.warp.freq_x >= 0.0 && p.warp.freq_y >= 0.0, "warp frequencies must be >= 0");
}

double draw(Rng& rng, const Range& r, const char* name) {
  detail::require(r.lo <= r.hi, std::string("inverted range for ") + name);
  return rng.uniform(r.lo, r.hi);
}

}  // namespace

AugmentRanges AugmentRanges::defaults_for(int width, int height) {
  AugmentRanges r;
  r.shift_x = {-0.1 * width, 0.1 * width};
  r.shift_y = {-0.1 * height, 0.1 * height};
  return r;
}

AugmentRanges AugmentRanges::fixed(const AugmentParams& p) {
  AugmentRanges r;
  auto pt = [](double v) { return Range{v, v}; };
  r.rotation = pt(p.rotation);
  r.flip_h_prob = p.flip_h ? 1.0 : 0.0;
  r.flip_v_prob = p.flip_v ? 1.0 : 0.0;
  r.scale = pt(p.scale);
  r.shift_x = pt(p.shift_x);
  r.shift_y = pt(p.shift_y);
  r.crop_fraction = pt(p.crop_fraction);
  r.amp_x = pt(p.warp.amp_x);
  r.amp_y = pt(p.warp.amp_y);
  r.freq_x = pt(p.warp.freq_x);
  r.freq_y = pt(p.warp.freq_y);
  r.phase_x = pt(p.warp.phase_x);
  r.phase_y = pt(p.warp.phase_y);
  return r;
}

AugmentParams sample_params(std::uint64_t seed, const AugmentRanges& ranges) {
  detail::require(ranges.flip_h_prob >= 0.0 && ranges.flip_h_prob <= 1.0 &&
                      ranges.flip_v_prob >= 0.0 && ranges.flip_v_prob <= 1.0,
                  "flip probabilities must be in [0, 1]");
  Rng rng(seed);
  AugmentParams p;
  p.rotation = draw(rng, ranges.rotation, "rotation");
  p.flip_h = rng.bernoulli(ranges.flip_h_prob);
  p.flip_v = rng.bernoulli(ranges.flip_v_prob);
  p.scale = draw(rng, ranges.scale, "scale");
  p.shift_x = draw(rng, ranges.shift_x, "shift_x");
  p.shift_y = draw(rng, ranges.shift_y, "shift_y");
  p.crop_fraction = draw(rng, ranges.crop_fraction, "crop_fraction");
  p.warp.amp_x = draw(rng, ranges.amp_x, "amp_x");
  p.warp.amp_y = draw(rng, ranges.amp_y, "amp_y");
  p.warp.freq_x = draw(rng, ranges.freq_x, "freq_x");
  p.warp.freq_y = draw(rng, ranges.freq_y, "freq_y");
  p.warp.phase_x = draw(rng, ranges.phase_x, "phase_x");
  p.warp.phase_y = draw(rng, ranges.phase_y, "phase_y");
  check_params(p);
  return p;
}

Augmented apply(const ImageTensor& img, const std::optional<MaskImage>& mask,
                const AugmentParams& p) {
  check_mask(img, mask);
  check_params(p);
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  const auto [cs, sn] = cos_sin_deg(p.rotation);
  const WarpMap warp{p.warp, double(img.width()), double(img.height())};
  return resample(img, mask, [&](double x, double y) -> std::pair<double, double> {
    auto [wx, wy] = warp(x, y);
    // Undo crop zoom, shift, scale, rotation and flips, in that order.
    double dx = (wx - cx) * p.crop_fraction - p.shift_x;
    double dy = (wy - cy) * p.crop_fraction - p.shift_y;
    dx /= p.scale;
    dy /= p.scale;
    // Image rows grow downward, so a visually counter-clockwise turn is
    // undone by this rotation.
    double rx = cs * dx - sn * dy;
    double ry = sn * dx + cs * dy;
    if (p.flip_h) rx = -rx;
    if (p.flip_v) ry = -ry;
    return {cx + rx, cy + ry};
  });
}

Augmented sinusoidal_warp(const ImageTensor& img, const std::optional<MaskImage>& mask,
                          const WarpSpec& w) {
  check_mask(img, mask);
  return resample(img, mask, WarpMap{w, double(img.width()), double(img.height())});
}

}  // namespace dermo::augment
