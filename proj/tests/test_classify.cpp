#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "dermo/classify.hpp"
#include "dermo/errors.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace dermo;
using namespace dermo::classify;

namespace {

Rows random_rows(Rng& rng, int n, int dims) {
  Rows x(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(dims)));
  for (auto& r : x)
    for (double& v : r) v = rng.uniform();
  return x;
}

std::vector<int> random_labels(Rng& rng, int n) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int& v : y) v = rng.bernoulli(0.5) ? 1 : -1;
  y[0] = 1;
  y[1] = -1;
  return y;
}

// Two mirror-image classes: x and 1 - x in every dimension.
void mirror_data(Rng& rng, int per_class, Rows& x, std::vector<int>& y) {
  for (int i = 0; i < per_class; ++i) {
    std::vector<double> a(4);
    for (double& v : a) v = 0.6 + 0.4 * rng.uniform();
    std::vector<double> b(4);
    for (std::size_t d = 0; d < 4; ++d) b[d] = 1.0 - a[d];
    x.push_back(a);
    y.push_back(1);
    x.push_back(b);
    y.push_back(-1);
  }
}

}  // namespace

TEST(Normalizer, Examples) {
  const auto n = SigmoidNormalizer::fit({{0.0}, {2.0}});
  EXPECT_DOUBLE_EQ(n.mu()[0], 1.0);
  EXPECT_DOUBLE_EQ(n.sigma()[0], 1.0);
  EXPECT_DOUBLE_EQ(n.apply(std::vector<double>{1.0})[0], 0.5);
  const double big = n.apply(std::vector<double>{1e6})[0];
  EXPECT_LE(big, 1.0);
  EXPECT_GT(big, 0.999);
  EXPECT_THROW(SigmoidNormalizer::fit({}), ContractError);
  EXPECT_THROW(n.apply(std::vector<double>{1.0, 2.0}), ContractError);
}

TEST(Normalizer, ConstantDimensionIsFloored) {
  const auto n = SigmoidNormalizer::fit({{3.0, 1.0}, {3.0, 2.0}});
  EXPECT_GE(n.sigma()[0], SigmoidNormalizer::kSigmaFloor);
  EXPECT_DOUBLE_EQ(n.apply(std::vector<double>{3.0, 1.5})[0], 0.5);
}

TEST(Hik, Examples) {
  const std::vector<double> x{0.2, 0.7};
  EXPECT_DOUBLE_EQ(hik(x, x), 0.9);
  EXPECT_EQ(hik(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(hik(x, std::vector<double>{0.5, 0.3}), 0.5);
  EXPECT_THROW(hik(x, std::vector<double>{1.0}), ContractError);
}

TEST(Hik, GramIsPositiveSemidefiniteProperty) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = oracle::hik_gram(random_rows(rng, 20, 6));
    EXPECT_TRUE(k.isApprox(k.transpose()));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(Svm, TwoPointsLargeC) {
  const Rows x{{0.0}, {1.0}};
  const std::vector<int> y{-1, 1};
  SvmOptions opts;
  opts.C = 1e3;
  const auto m = train_svm(x, y, opts);
  EXPECT_LT(m.decision(x[0]), 0.0);
  EXPECT_GT(m.decision(x[1]), 0.0);
  const auto sol = solve_dual(x, y, opts);
  const auto ref = oracle::svm_dual(oracle::hik_gram(x), y, opts.C);
  EXPECT_NEAR(sol.objective, ref.objective, 1e-4 * std::max(1.0, std::abs(ref.objective)));
}

TEST(Svm, MatchesBruteForceDual) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_rows(rng, 6, 3);
    const auto y = random_labels(rng, 6);
    SvmOptions opts;
    opts.C = 0.5 + 5 * rng.uniform();
    const auto sol = solve_dual(x, y, opts);
    const auto ref = oracle::svm_dual(oracle::hik_gram(x), y, opts.C);
    EXPECT_NEAR(sol.objective, ref.objective, 1e-4 * std::max(1.0, std::abs(ref.objective)));
    EXPECT_TRUE(sol.converged);
  }
}

TEST(Svm, DualCoefficientsSumToZero) {
  Rng rng(3);
  const auto x = random_rows(rng, 15, 4);
  const auto y = random_labels(rng, 15);
  const auto m = train_svm(x, y);
  double s = 0;
  for (double c : m.dual_coef) s += c;
  EXPECT_NEAR(s, 0.0, 1e-6);
}

TEST(Svm, FreeSupportVectorsSitOnTheMargin) {
  Rng rng(4);
  const auto x = random_rows(rng, 12, 3);
  const auto y = random_labels(rng, 12);
  SvmOptions opts;
  opts.C = 10;
  const auto sol = solve_dual(x, y, opts);
  const auto m = train_svm(x, y, opts);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (sol.alpha[i] > 0 && sol.alpha[i] < opts.C) EXPECT_NEAR(std::abs(m.decision(x[i])), 1.0, 1e-3);
}

TEST(Svm, DuplicatedRowsKeepTheDecision) {
  Rng rng(5);
  const auto x = random_rows(rng, 6, 3);
  const auto y = random_labels(rng, 6);
  Rows x2 = x;
  x2.insert(x2.end(), x.begin(), x.end());
  std::vector<int> y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  SvmOptions opts;
  opts.C = 1.0;
  opts.tolerance = 1e-9;
  SvmOptions half = opts;
  half.C = 0.5;  // each copy carries half the weight of the original
  const auto a = train_svm(x, y, opts);
  const auto b = train_svm(x2, y2, half);
  for (const auto& row : x) EXPECT_NEAR(a.decision(row), b.decision(row), 1e-6);
}

TEST(Svm, LabelFlipNegatesDecision) {
  Rng rng(6);
  const auto x = random_rows(rng, 10, 3);
  auto y = random_labels(rng, 10);
  SvmOptions opts;
  opts.tolerance = 1e-9;
  const auto a = train_svm(x, y, opts);
  for (int& v : y) v = -v;
  const auto b = train_svm(x, y, opts);
  for (const auto& row : x) EXPECT_NEAR(a.decision(row), -b.decision(row), 1e-6);
}

TEST(Svm, EmptySupportDecisionIsBias) {
  SvmModel m;
  m.bias = 0.25;
  EXPECT_EQ(m.decision(std::vector<double>{1.0, 2.0}), 0.25);
}

TEST(Svm, ContractErrors) {
  EXPECT_THROW(train_svm({{0.1}, {0.2}}, std::vector<int>{1, 1}), ContractError);
  EXPECT_THROW(train_svm({{0.1}, {0.2}}, std::vector<int>{1, 0}), ContractError);
  SvmOptions bad;
  bad.C = 0;
  EXPECT_THROW(train_svm({{0.1}, {0.2}}, std::vector<int>{1, -1}, bad), ContractError);
}

TEST(Platt, SymmetricDataIsCenteredAtHalf) {
  Rng rng(7);
  Rows x;
  std::vector<int> y;
  mirror_data(rng, 30, x, y);
  const auto fit = fit_classifier(x, y, SvmOptions{}, 3, 1);
  EXPECT_NEAR(fit.model.calibration.probability(0.0), 0.5, 0.05);
  const auto& m = fit.model;
  std::vector<double> a{0.8, 0.7, 0.9, 0.75};
  std::vector<double> b(4);
  for (std::size_t d = 0; d < 4; ++d) b[d] = 1.0 - a[d];
  EXPECT_NEAR(m.predict_proba(a) + m.predict_proba(b), 1.0, 0.05);
}

TEST(Platt, RandomLabelsStayNearBaseRate) {
  Rng rng(8);
  const auto x = random_rows(rng, 200, 5);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) y[std::size_t(i)] = i % 2 ? 1 : -1;
  rng.shuffle(y);
  const auto fit = fit_classifier(x, y, SvmOptions{}, 3, 2);
  double mean = 0;
  for (double p : fit.oof_probabilities) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    mean += p;
  }
  EXPECT_NEAR(mean / 200, 0.5, 0.15);
}

TEST(Platt, ClassTooSmallIsContractError) {
  Rng rng(9);
  const auto x = random_rows(rng, 5, 2);
  EXPECT_THROW(platt_calibrate(x, std::vector<int>{1, 1, -1, -1, -1}, SvmOptions{}, 3), ContractError);
}

TEST(Calibration, MonotoneAndBounded) {
  const Calibration c{-2.0, 0.3};
  double prev = 0.0;
  for (double d = -50; d <= 50; d += 0.5) {
    const double p = c.probability(d);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_GE(p, prev);
    prev = p;
  }
  EXPECT_GT(c.probability(1.0), c.probability(0.9));
}

TEST(Calibration, UnfittedClassifierIsContractError) {
  CalibratedClassifier m;
  EXPECT_THROW(m.predict_proba(std::vector<double>{1.0}), ContractError);
}

TEST(ModelIo, JsonRoundTripPreservesPredictions) {
  Rng rng(10);
  Rows x;
  std::vector<int> y;
  mirror_data(rng, 10, x, y);
  auto fit = fit_classifier(x, y, SvmOptions{}, 3, 4);
  fit.model.feature = "color_hist";
  fit.model.context = "WI";
  const auto back = model_from_json(model_to_json(fit.model));
  EXPECT_EQ(back.feature, "color_hist");
  EXPECT_EQ(back.context, "WI");
  for (const auto& row : x) EXPECT_EQ(back.predict_proba(row), fit.model.predict_proba(row));
  testutil::TempDir dir("model");
  save_model(dir / "m.json", fit.model);
  EXPECT_EQ(load_model(dir / "m.json").predict_proba(x[0]), fit.model.predict_proba(x[0]));
  EXPECT_THROW(model_from_json("{\"feature\": 3}"), ValidationError);
}

TEST(FitClassifier, DeterministicForFixedSeed) {
  Rng rng(11);
  const auto x = random_rows(rng, 30, 4);
  const auto y = random_labels(rng, 30);
  const auto a = fit_classifier(x, y, SvmOptions{}, 3, 9);
  const auto b = fit_classifier(x, y, SvmOptions{}, 3, 9);
  EXPECT_EQ(a.oof_probabilities, b.oof_probabilities);
}
