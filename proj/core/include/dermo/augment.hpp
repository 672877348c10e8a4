#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "dermo/imaging.hpp"

namespace dermo::augment {

/// Sinusoidal displacement field. Each axis is displaced as a function of the
/// other axis' coordinate:
///   x' = x + amp_x * sin(2 pi freq_x y / H + phase_x)
///   y' = y + amp_y * sin(2 pi freq_y x / W + phase_y)
struct WarpSpec {
  double amp_x = 0.0;
  double amp_y = 0.0;
  double freq_x = 0.0;
  double freq_y = 0.0;
  double phase_x = 0.0;
  double phase_y = 0.0;
};

struct AugmentParams {
  double rotation = 0.0;  // degrees, counter-clockwise
  bool flip_h = false;
  bool flip_v = false;
  double scale = 1.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
  double crop_fraction = 1.0;  // centered crop, re-resized to full size
  WarpSpec warp;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling ranges. Flips are drawn with the given probabilities.
struct AugmentRanges {
  Range rotation{-180.0, 180.0};
  double flip_h_prob = 0.5;
  double flip_v_prob = 0.5;
  Range scale{0.8, 1.2};
  Range shift_x{-12.8, 12.8};
  Range shift_y{-12.8, 12.8};
  Range crop_fraction{0.8, 1.0};
  Range amp_x{0.0, 5.0};
  Range amp_y{0.0, 5.0};
  Range freq_x{0.0, 3.0};
  Range freq_y{0.0, 3.0};
  Range phase_x{0.0, 6.283185307179586};
  Range phase_y{0.0, 6.283185307179586};

  /// Defaults with shifts set to +/-10% of the given dimensions.
  static AugmentRanges defaults_for(int width, int height);
  /// Every range collapsed to a point (lo == hi), flips off.
  static AugmentRanges fixed(const AugmentParams& p);
};

AugmentParams sample_params(std::uint64_t seed, const AugmentRanges& ranges);

struct Augmented {
  ImageTensor image;
  std::optional<MaskImage> mask;
};

/// Flip, rotate, scale, shift and crop about the image center, then warp.
/// The image is resampled bilinearly, the mask by nearest neighbour; both use
/// the same inverse mapping and clamp to the border.
Augmented apply(const ImageTensor& img, const std::optional<MaskImage>& mask,
                const AugmentParams& p);

Augmented sinusoidal_warp(const ImageTensor& img, const std::optional<MaskImage>& mask,
                          const WarpSpec& w);

}  // namespace dermo::augment
