#pragma once

#include <array>
#include <string>
#include <vector>

#include "dermo/imaging.hpp"

namespace dermo::features {

inline constexpr int kColorHistDims = 166;
inline constexpr int kEdgeHistDims = 64;
inline constexpr int kLbpBins = 59;
inline constexpr int kMslbpDims = 4 * kLbpBins;

inline constexpr const char* kColorHist = "color_hist";
inline constexpr const char* kEdgeHist = "edge_hist";
inline constexpr const char* kMslbp = "mslbp";

struct FeatureVector {
  std::string name;
  std::vector<double> values;

  std::size_t dims() const noexcept { return values.size(); }
};

/// 18 hue x 3 saturation x 3 value chromatic bins followed by 4 gray bins.
/// Pixels with S < 0.1 or V < 0.1 go to gray bin floor(4 V).
FeatureVector color_histogram_166(const ImageTensor& rgb);

/// Bin index used by color_histogram_166 for one HSV triple.
int color_bin(double h, double s, double v);

/// Joint 8 direction x 8 magnitude histogram of 3x3 Sobel responses on
/// luminance, interior pixels only. Index = direction * 8 + magnitude.
FeatureVector edge_histogram_64(const ImageTensor& img);

/// Maps an 8-bit LBP code to its u2 bin: the 58 uniform codes in increasing
/// code order, then 58 for every non-uniform code.
int lbp_uniform_bin(unsigned code);

/// Raw 59-bin count histogram of one plane (8 neighbours, radius 1,
/// neighbour >= center sets the bit). Needs at least 3x3.
std::array<double, kLbpBins> lbp_histogram(const ImageTensor& img, int channel);

/// R, G, B and Hue LBP histograms over scales 1, 1/2, 1/4, 1/8, each scale's
/// histogram normalized then weighted by its scale, summed, and L1-normalized
/// per channel. Scales smaller than 3x3 are skipped.
FeatureVector mslbp_236(const ImageTensor& rgb);

}  // namespace dermo::features
