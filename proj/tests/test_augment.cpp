#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dermo/augment.hpp"
#include "dermo/errors.hpp"
#include "testutil.hpp"

using namespace dermo;
using namespace dermo::augment;

TEST(SampleParams, DegenerateRangesGiveExactValues) {
  AugmentParams p;
  p.rotation = 12.5;
  p.flip_h = true;
  p.scale = 1.1;
  p.shift_x = -3;
  p.shift_y = 2;
  p.crop_fraction = 0.9;
  p.warp = {1.5, 0.5, 2.0, 1.0, 0.3, 0.7};
  const auto q = sample_params(77, AugmentRanges::fixed(p));
  EXPECT_EQ(q.rotation, p.rotation);
  EXPECT_EQ(q.flip_h, p.flip_h);
  EXPECT_EQ(q.flip_v, p.flip_v);
  EXPECT_EQ(q.scale, p.scale);
  EXPECT_EQ(q.shift_x, p.shift_x);
  EXPECT_EQ(q.crop_fraction, p.crop_fraction);
  EXPECT_EQ(q.warp.amp_x, p.warp.amp_x);
  EXPECT_EQ(q.warp.phase_y, p.warp.phase_y);
}

TEST(SampleParams, SeedDeterminismAndSpread) {
  const auto r = AugmentRanges::defaults_for(100, 80);
  const auto a = sample_params(5, r), b = sample_params(5, r);
  EXPECT_EQ(a.rotation, b.rotation);
  EXPECT_EQ(a.warp.phase_x, b.warp.phase_x);
  std::set<double> rotations;
  for (std::uint64_t s = 0; s < 100; ++s) rotations.insert(sample_params(s, r).rotation);
  EXPECT_EQ(rotations.size(), 100u);
}

TEST(SampleParams, InvertedRangeIsContractError) {
  auto r = AugmentRanges::defaults_for(10, 10);
  r.scale = {1.2, 0.8};
  EXPECT_THROW(sample_params(1, r), ContractError);
}

TEST(SampleParams, ShiftsScaleWithImage) {
  const auto r = AugmentRanges::defaults_for(200, 50);
  EXPECT_DOUBLE_EQ(r.shift_x.hi, 20.0);
  EXPECT_DOUBLE_EQ(r.shift_y.lo, -5.0);
}

TEST(Apply, IdentityParams) {
  Rng rng(2);
  const auto img = testutil::random_rgb(rng, 9, 6);
  const auto mask = testutil::random_binary_mask(rng, 9, 6);
  const auto out = apply(img, mask, AugmentParams{});
  for (std::size_t i = 0; i < img.values().size(); ++i) EXPECT_NEAR(out.image.values()[i], img.values()[i], 1e-9);
  EXPECT_EQ(*out.mask, mask);
}

TEST(Apply, FlipTwiceIsIdentity) {
  Rng rng(3);
  const auto img = testutil::random_rgb(rng, 8, 5);
  AugmentParams p;
  p.flip_h = true;
  const auto once = apply(img, std::nullopt, p);
  EXPECT_NE(once.image, img);
  EXPECT_FALSE(once.mask.has_value());
  const auto twice = apply(once.image, std::nullopt, p);
  for (std::size_t i = 0; i < img.values().size(); ++i) EXPECT_NEAR(twice.image.values()[i], img.values()[i], 1e-9);
}

// Counter-clockwise quarter turn of [a b; c d] is [b d; a c].
TEST(Apply, QuarterTurnPermutesPixels) {
  const ImageTensor img(2, 2, ColorSpace::GRAY, {0.1, 0.2, 0.3, 0.4});
  AugmentParams p;
  p.rotation = 90.0;
  const auto out = apply(img, std::nullopt, p);
  EXPECT_NEAR(out.image.at(0, 0, 0), 0.2, 1e-9);
  EXPECT_NEAR(out.image.at(0, 0, 1), 0.4, 1e-9);
  EXPECT_NEAR(out.image.at(0, 1, 0), 0.1, 1e-9);
  EXPECT_NEAR(out.image.at(0, 1, 1), 0.3, 1e-9);
}

TEST(Apply, DimensionMismatchIsContractError) {
  EXPECT_THROW(apply(ImageTensor(4, 4, ColorSpace::RGB), MaskImage(4, 3), AugmentParams{}), ContractError);
}

TEST(Apply, MasksStayBinaryProperty) {
  Rng rng(9);
  const auto img = testutil::random_rgb(rng, 17, 13);
  const auto ranges = AugmentRanges::defaults_for(17, 13);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto mask = testutil::random_binary_mask(rng, 17, 13, 0.3);
    const auto out = apply(img, mask, sample_params(seed, ranges));
    ASSERT_TRUE(out.mask->is_binary()) << "seed " << seed;
    ASSERT_EQ(out.image.width(), 17);
    ASSERT_EQ(out.image.height(), 13);
  }
}

TEST(Warp, ZeroAmplitudeIsIdentity) {
  Rng rng(4);
  const auto img = testutil::random_rgb(rng, 10, 7);
  const auto mask = testutil::random_binary_mask(rng, 10, 7);
  const auto out = sinusoidal_warp(img, mask, WarpSpec{0, 0, 2.5, 1.5, 0.4, 1.1});
  EXPECT_EQ(out.image, img);
  EXPECT_EQ(*out.mask, mask);
}

// amp_x = 1, freq_x = 0, phase_x = pi/2 displaces every row by exactly one pixel.
TEST(Warp, ConstantShift) {
  Rng rng(6);
  const auto img = testutil::random_rgb(rng, 8, 4);
  const auto out = sinusoidal_warp(img, std::nullopt, WarpSpec{1.0, 0.0, 0.0, 0.0, M_PI / 2, 0.0});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 8; ++x) {
        const int src = std::min(x + 1, 7);
        EXPECT_NEAR(out.image.at(c, y, x), img.at(c, y, src), 1e-9);
      }
}

TEST(Warp, BinaryMaskClosure) {
  Rng rng(7);
  const auto img = testutil::random_rgb(rng, 12, 12);
  const auto mask = testutil::random_binary_mask(rng, 12, 12);
  const auto out = sinusoidal_warp(img, mask, WarpSpec{3.3, 2.1, 1.7, 2.9, 0.2, 4.0});
  EXPECT_TRUE(out.mask->is_binary());
}
