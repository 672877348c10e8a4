#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dermo/errors.hpp"
#include "dermo/sparse.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace dermo;
using namespace dermo::sparse;

namespace {

Dictionary identity_dictionary(int n) {
  std::vector<double> atoms(std::size_t(n * n), 0.0);
  for (int j = 0; j < n; ++j) atoms[std::size_t(j * n + j)] = 1.0;
  return Dictionary(n, n, ColorSpace::GRAY, int(std::lround(std::sqrt(n))), std::move(atoms));
}

Dictionary random_dictionary(Rng& rng, int atom_dim, int n_atoms, int side) {
  std::vector<double> atoms(static_cast<std::size_t>(atom_dim * n_atoms));
  for (int j = 0; j < n_atoms; ++j) {
    double norm = 0;
    for (int d = 0; d < atom_dim; ++d) {
      const double v = 2 * rng.uniform() - 1;
      atoms[std::size_t(j * atom_dim + d)] = v;
      norm += v * v;
    }
    for (int d = 0; d < atom_dim; ++d) atoms[std::size_t(j * atom_dim + d)] /= std::sqrt(norm);
  }
  return Dictionary(atom_dim, n_atoms, ColorSpace::GRAY, side, std::move(atoms));
}

}  // namespace

TEST(Patches, Counts) {
  Rng rng(1);
  EXPECT_EQ(extract_patches(testutil::random_rgb(rng, 8, 8), 8, 8).size(), 1u);
  EXPECT_EQ(extract_patches(testutil::random_rgb(rng, 128, 128), 8, 8).size(), 256u);
  EXPECT_EQ(extract_patches(testutil::random_rgb(rng, 8, 8), 8, 8)[0].size(), 192u);
  EXPECT_THROW(extract_patches(testutil::random_rgb(rng, 6, 8), 8, 8), ContractError);
}

TEST(Patches, ConstantImageGivesZeroPatches) {
  const ImageTensor img(16, 16, ColorSpace::GRAY, std::vector<double>(256, 0.7));
  for (const auto& p : extract_patches(img, 8, 8))
    for (double v : p) EXPECT_EQ(v, 0.0);
}

TEST(Patches, ZeroMean) {
  Rng rng(2);
  for (const auto& p : extract_patches(testutil::random_rgb(rng, 24, 16), 8, 4)) {
    double s = 0;
    for (double v : p) s += v;
    EXPECT_NEAR(s, 0.0, 1e-12);
  }
}

TEST(Dictionary, RejectsAtomsOutsideBall) {
  EXPECT_THROW(Dictionary(1, 1, ColorSpace::GRAY, 1, {1.5}), ContractError);
  EXPECT_THROW(Dictionary(4, 1, ColorSpace::GRAY, 1, {0, 0, 0, 1}), ContractError);
}

TEST(Lasso, SoftThresholdOfAnAtom) {
  const auto d = identity_dictionary(4);
  const std::vector<double> x{0, 0, 1, 0};
  const auto code = lasso_encode(x, d, 0.15);
  ASSERT_EQ(code.indices, std::vector<int>{2});
  EXPECT_NEAR(code.coefficients[0], 0.85, 1e-9);
}

TEST(Lasso, LargeLambdaAndZeroSignal) {
  Rng rng(3);
  const auto d = random_dictionary(rng, 9, 12, 3);
  std::vector<double> x(9);
  for (double& v : x) v = 2 * rng.uniform() - 1;
  double max_corr = 0;
  for (int j = 0; j < 12; ++j) {
    double c = 0;
    for (int k = 0; k < 9; ++k) c += d.atom(j)[std::size_t(k)] * x[std::size_t(k)];
    max_corr = std::max(max_corr, std::abs(c));
  }
  EXPECT_TRUE(lasso_encode(x, d, max_corr).indices.empty());
  EXPECT_TRUE(lasso_encode(std::vector<double>(9, 0.0), d, 0.1).indices.empty());
}

TEST(Lasso, DimensionMismatchIsContractError) {
  const auto d = identity_dictionary(4);
  EXPECT_THROW(lasso_encode(std::vector<double>(3, 0.0), d, 0.1), ContractError);
  EXPECT_THROW(lasso_encode(std::vector<double>(4, 0.0), d, 0.0), ContractError);
}

TEST(Lasso, MatchesExhaustiveSearch) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_dictionary(rng, 4, 4, 2);
    std::vector<double> x(4);
    for (double& v : x) v = 2 * rng.uniform() - 1;
    const double lambda = 0.05 + 0.3 * rng.uniform();
    const auto code = lasso_encode(x, d, lambda);
    Eigen::VectorXd best;
    const double ref = oracle::lasso_exhaustive(Eigen::Map<const Eigen::MatrixXd>(d.atoms().data(), 4, 4),
                                                Eigen::Map<const Eigen::VectorXd>(x.data(), 4), lambda, &best);
    EXPECT_NEAR(lasso_objective(x, d, code, lambda), ref, 1e-9);
    const auto dense = code.dense(4);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(dense[std::size_t(j)], best(j), 1e-4);
  }
}

TEST(Lasso, CodeInvariants) {
  Rng rng(5);
  const auto d = random_dictionary(rng, 16, 30, 4);
  std::vector<double> x(16);
  for (double& v : x) v = 2 * rng.uniform() - 1;
  const auto code = lasso_encode(x, d, 0.05);
  for (std::size_t i = 0; i < code.indices.size(); ++i) {
    EXPECT_NE(code.coefficients[i], 0.0);
    if (i) EXPECT_LT(code.indices[i - 1], code.indices[i]);
  }
}

TEST(Learn, DeterministicAndNonincreasingSurrogate) {
  Rng rng(6);
  std::vector<std::vector<double>> patches;
  for (int i = 0; i < 400; ++i) {
    std::vector<double> p(9);
    for (double& v : p) v = 2 * rng.uniform() - 1;
    patches.push_back(p);
  }
  LearnOptions opts;
  opts.n_atoms = 6;
  opts.iterations = 30;
  opts.batch_size = 16;
  opts.seed = 3;
  LearnTrace trace;
  const auto a = learn_dictionary(patches, ColorSpace::GRAY, 3, opts, &trace);
  const auto b = learn_dictionary(patches, ColorSpace::GRAY, 3, opts);
  EXPECT_EQ(a, b);
  ASSERT_EQ(trace.surrogate_before.size(), 30u);
  for (std::size_t t = 0; t < 30; ++t) EXPECT_LE(trace.surrogate_after[t], trace.surrogate_before[t] * (1 + 1e-12));
  for (int j = 0; j < a.n_atoms(); ++j) {
    double n = 0;
    for (double v : a.atom(j)) n += v * v;
    EXPECT_LE(std::sqrt(n), 1.0 + 1e-9);
  }
}

TEST(Learn, TooFewPatchesIsContractError) {
  std::vector<std::vector<double>> patches(3, std::vector<double>(4, 0.1));
  LearnOptions opts;
  opts.n_atoms = 4;
  EXPECT_THROW(learn_dictionary(patches, ColorSpace::GRAY, 2, opts), ContractError);
}

TEST(Encode, ConstantImageIsZero) {
  Rng rng(7);
  const auto d = random_dictionary(rng, 64, 10, 8);
  const ImageTensor img(40, 40, ColorSpace::GRAY, std::vector<double>(1600, 0.3));
  const auto f = encode_image(img, d);
  ASSERT_EQ(f.dims(), 10u);
  for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(Encode, TiledPatchPoolsToItsCode) {
  Rng rng(8);
  const auto d = random_dictionary(rng, 64, 10, 8);
  ImageTensor tile(8, 8, ColorSpace::GRAY);
  for (double& v : tile.values()) v = rng.uniform();
  ImageTensor img(128, 128, ColorSpace::GRAY);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) img.at(0, y, x) = tile.at(0, y % 8, x % 8);
  const auto patch = extract_patches(tile, 8, 8)[0];
  const auto expected = lasso_encode(patch, d).dense(10);
  const auto f = encode_image(img, d);
  for (int j = 0; j < 10; ++j) EXPECT_NEAR(f.values[std::size_t(j)], std::abs(expected[std::size_t(j)]), 1e-9);
}

TEST(Encode, ColorspaceMismatchIsContractError) {
  Rng rng(9);
  const auto d = random_dictionary(rng, 64, 4, 8);
  EXPECT_THROW(encode_image(testutil::random_rgb(rng, 16, 16), d), ContractError);
}

TEST(Serialization, RoundTripIsExact) {
  Rng rng(10);
  const auto d = random_dictionary(rng, 16, 7, 4);
  EXPECT_EQ(deserialize(serialize(d)), d);
  testutil::TempDir dir("dict");
  save_dictionary(dir / "d.bin", d);
  EXPECT_EQ(load_dictionary(dir / "d.bin"), d);
  auto bytes = serialize(d);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize(bytes), DecodeError);
}
