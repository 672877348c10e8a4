#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dermo::classify {

using Rows = std::vector<std::vector<double>>;

/// Per-dimension logistic squashing with training mean and (population)
/// standard deviation: x_d -> 1 / (1 + exp(-(x_d - mu_d) / sigma_d)).
class SigmoidNormalizer {
 public:
  static constexpr double kSigmaFloor = 1e-12;

  SigmoidNormalizer() = default;
  SigmoidNormalizer(std::vector<double> mu, std::vector<double> sigma);

  static SigmoidNormalizer fit(const Rows& rows);

  std::vector<double> apply(std::span<const double> x) const;
  Rows apply(const Rows& rows) const;

  const std::vector<double>& mu() const noexcept { return mu_; }
  const std::vector<double>& sigma() const noexcept { return sigma_; }
  std::size_t dims() const noexcept { return mu_.size(); }

 private:
  std::vector<double> mu_;
  std::vector<double> sigma_;
};

/// Histogram intersection kernel: sum_d min(x_d, y_d).
double hik(std::span<const double> x, std::span<const double> y);

struct SvmOptions {
  double C = 1.0;
  /// Stop when the maximal violating pair gap m(a) - M(a) drops below this.
  double tolerance = 1e-3;
  long max_iterations = 10'000'000;
};

/// Raw output of the dual solver, indexed like the training rows.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  /// 0.5 a^T Q a - sum a, with Q_ij = y_i y_j K_ij.
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
};

/// Soft-margin C-SVM dual with the HIK Gram matrix, solved by SMO with the
/// maximal violating pair. Labels are -1 / +1.
DualSolution solve_dual(const Rows& x, std::span<const int> y, const SvmOptions& opts);

struct SvmModel {
  Rows support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i
  double bias = 0.0;
  double C = 1.0;

  double decision(std::span<const double> x) const;
};

SvmModel train_svm(const Rows& x, std::span<const int> y, const SvmOptions& opts = {});

/// P(positive | f) = 1 / (1 + exp(A f + B)).
struct Calibration {
  double A = 0.0;
  double B = 0.0;

  double probability(double decision) const;
};

/// Regularized maximum-likelihood logistic fit over (decision, label) pairs.
/// With `balanced_prior`, each class is reweighted to an effective count of
/// N / 2 before the (N+ + 1)/(N+ + 2), 1/(N- + 2) targets are formed.
Calibration fit_logistic(std::span<const double> decisions, std::span<const int> labels,
                         bool balanced_prior = true);

struct PlattResult {
  SvmModel svm;
  Calibration calibration;
  std::vector<double> oof_decisions;
  std::vector<int> fold_of;
};

/// Stratified k-fold out-of-fold decisions -> logistic fit; the returned SVM
/// is retrained on all rows. x must already be normalized.
PlattResult platt_calibrate(const Rows& x, std::span<const int> y, const SvmOptions& opts,
                            int folds = 3, std::uint64_t seed = 0);

/// Normalizer + SVM + calibration for one (feature, context) component.
struct CalibratedClassifier {
  std::string feature;
  std::string context;
  SigmoidNormalizer normalizer;
  SvmModel svm;
  Calibration calibration;
  std::uint64_t seed = 0;
  int folds = 3;
  bool fitted = false;

  double decision(std::span<const double> raw) const;
  double predict_proba(std::span<const double> raw) const;
};

struct FitResult {
  CalibratedClassifier model;
  /// Calibrated out-of-fold probabilities for the training rows.
  std::vector<double> oof_probabilities;
};

FitResult fit_classifier(const Rows& raw, std::span<const int> y, const SvmOptions& opts, int folds,
                         std::uint64_t seed);

double predict_proba(const CalibratedClassifier& m, std::span<const double> raw);

std::string model_to_json(const CalibratedClassifier& m);
CalibratedClassifier model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const CalibratedClassifier& m);
CalibratedClassifier load_model(const std::filesystem::path& path);

}  // namespace dermo::classify
