#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "dermo/errors.hpp"
#include "dermo/features.hpp"
#include "testutil.hpp"

using namespace dermo;
using namespace dermo::features;

namespace {

ImageTensor constant_rgb(int w, int h, double r, double g, double b) {
  ImageTensor img(w, h, ColorSpace::RGB);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  return img;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Enumerates all 256 codes: uniform ones have at most two circular bit flips.
int reference_uniform_bin(unsigned code) {
  int next = 0;
  for (unsigned c = 0; c < 256; ++c) {
    int flips = 0;
    for (int b = 0; b < 8; ++b) flips += ((c >> b) & 1u) != ((c >> ((b + 1) % 8)) & 1u);
    if (flips <= 2) {
      if (c == code) return next;
      ++next;
    }
  }
  return kLbpBins - 1;
}

}  // namespace

TEST(ColorHistogram, PureRedIsOneBin) {
  const auto f = color_histogram_166(constant_rgb(4, 3, 1, 0, 0));
  ASSERT_EQ(f.dims(), 166u);
  EXPECT_EQ(std::count(f.values.begin(), f.values.end(), 1.0), 1);
  EXPECT_DOUBLE_EQ(sum(f.values), 1.0);
  EXPECT_EQ(f.values[std::size_t(color_bin(0.0, 1.0, 1.0))], 1.0);
}

TEST(ColorHistogram, BlackIsDarkestGray) {
  const auto f = color_histogram_166(constant_rgb(2, 2, 0, 0, 0));
  EXPECT_EQ(f.values[162], 1.0);
}

TEST(ColorHistogram, RedAndBlackSplitEvenly) {
  ImageTensor img(2, 1, ColorSpace::RGB, {1, 0, 0, 0, 0, 0});
  const auto f = color_histogram_166(img);
  EXPECT_EQ(f.values[162], 0.5);
  EXPECT_EQ(f.values[std::size_t(color_bin(0.0, 1.0, 1.0))], 0.5);
}

TEST(ColorHistogram, GrayBinsByValueQuartile) {
  EXPECT_EQ(color_bin(0.3, 0.05, 0.1), 162);
  EXPECT_EQ(color_bin(0.3, 0.05, 0.3), 163);
  EXPECT_EQ(color_bin(0.3, 0.05, 0.6), 164);
  EXPECT_EQ(color_bin(0.3, 0.05, 1.0), 165);
  EXPECT_EQ(color_bin(0.3, 0.9, 0.05), 162);
  for (double h = 0; h < 1; h += 0.01) {
    const int b = color_bin(h, 0.5, 0.5);
    EXPECT_GE(b, 0);
    EXPECT_LT(b, 162);
  }
}

TEST(ColorHistogram, PermutationInvariant) {
  Rng rng(3);
  const auto img = testutil::random_rgb(rng, 9, 7);
  std::vector<int> order(63);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  ImageTensor shuffled(9, 7, ColorSpace::RGB);
  for (int i = 0; i < 63; ++i)
    for (int c = 0; c < 3; ++c) shuffled.at(c, i / 9, i % 9) = img.at(c, order[std::size_t(i)] / 9, order[std::size_t(i)] % 9);
  EXPECT_EQ(color_histogram_166(img).values, color_histogram_166(shuffled).values);
}

TEST(ColorHistogram, EmptyIsContractError) { EXPECT_THROW(color_histogram_166(ImageTensor()), ContractError); }

TEST(EdgeHistogram, ConstantImageInFirstBin) {
  const auto f = edge_histogram_64(constant_rgb(6, 6, 0.3, 0.6, 0.2));
  ASSERT_EQ(f.dims(), 64u);
  EXPECT_EQ(f.values[0], 1.0);
}

TEST(EdgeHistogram, VerticalStepUsesOneDirection) {
  ImageTensor img(8, 6, ColorSpace::GRAY);
  for (int y = 0; y < 6; ++y)
    for (int x = 4; x < 8; ++x) img.at(0, y, x) = 1.0;
  const auto f = edge_histogram_64(img);
  double first_direction = 0;
  for (int m = 0; m < 8; ++m) first_direction += f.values[std::size_t(m)];
  EXPECT_NEAR(first_direction, 1.0, 1e-12);
  EXPECT_GT(sum({f.values.begin() + 1, f.values.begin() + 8}), 0.0);
}

TEST(EdgeHistogram, TooSmallIsContractError) {
  EXPECT_THROW(edge_histogram_64(ImageTensor(2, 5, ColorSpace::GRAY)), ContractError);
}

TEST(Lbp, UniformBinMatchesEnumeration) {
  for (unsigned code = 0; code < 256; ++code) EXPECT_EQ(lbp_uniform_bin(code), reference_uniform_bin(code)) << code;
}

// Equal neighbours all set their bit, giving code 255.
TEST(Lbp, ConstantPlane) {
  const ImageTensor img(5, 4, ColorSpace::GRAY, std::vector<double>(20, 0.4));
  const auto h = lbp_histogram(img, 0);
  EXPECT_EQ(h[std::size_t(lbp_uniform_bin(255))], 6.0);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), 0.0), 6.0);
}

// In a checkerboard, bright centers see bright diagonals and dark
// orthogonals (a non-uniform alternating code); dark centers see
// neighbours that are all >= themselves (code 255).
TEST(Lbp, CheckerboardAtScaleOne) {
  ImageTensor img(6, 6, ColorSpace::GRAY);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) img.at(0, y, x) = (x + y) % 2;
  const auto h = lbp_histogram(img, 0);
  EXPECT_EQ(h[kLbpBins - 1], 8.0);
  EXPECT_EQ(h[std::size_t(lbp_uniform_bin(255))], 8.0);
}

TEST(Mslbp, ConstantImagesAreIdentical) {
  const auto a = mslbp_236(constant_rgb(40, 30, 0.1, 0.2, 0.3));
  const auto b = mslbp_236(constant_rgb(40, 30, 0.9, 0.5, 0.7));
  ASSERT_EQ(a.dims(), 236u);
  EXPECT_EQ(a.values, b.values);
  for (int ch = 0; ch < 4; ++ch) EXPECT_DOUBLE_EQ(a.values[std::size_t(ch * kLbpBins + lbp_uniform_bin(255))], 1.0);
}

TEST(Mslbp, TinyImageIsContractError) { EXPECT_THROW(mslbp_236(constant_rgb(2, 2, 0, 0, 0)), ContractError); }

TEST(Features, NonnegativeAndNormalizedProperty) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 3 + int(rng.index(40)), h = 3 + int(rng.index(40));
    const auto img = testutil::random_rgb(rng, w, h);
    for (const auto& f : {color_histogram_166(img), edge_histogram_64(img)}) {
      EXPECT_NEAR(sum(f.values), 1.0, 1e-6);
      for (double v : f.values) EXPECT_GE(v, 0.0);
    }
    const auto m = mslbp_236(img);
    for (int ch = 0; ch < 4; ++ch)
      EXPECT_NEAR(std::accumulate(m.values.begin() + ch * kLbpBins, m.values.begin() + (ch + 1) * kLbpBins, 0.0), 1.0,
                  1e-6);
  }
}

// Tiling an image 2x2 leaves the histograms nearly unchanged.
TEST(Features, TilingInvarianceProperty) {
  Rng rng(23);
  const auto img = testutil::random_rgb(rng, 48, 40);
  ImageTensor tiled(96, 80, ColorSpace::RGB);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 80; ++y)
      for (int x = 0; x < 96; ++x) tiled.at(c, y, x) = img.at(c, y % 40, x % 48);
  auto l1 = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
  };
  EXPECT_LT(l1(color_histogram_166(img).values, color_histogram_166(tiled).values), 1e-12);
  EXPECT_LT(l1(edge_histogram_64(img).values, edge_histogram_64(tiled).values), 0.08);
}
