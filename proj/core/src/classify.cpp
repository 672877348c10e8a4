#include "dermo/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dermo/errors.hpp"
#include "dermo/random.hpp"

namespace dermo::classify {
namespace {

constexpr double kTau = 1e-12;

void check_labels(std::span<const int> y) {
  bool pos = false, neg = false;
  for (int v : y) {
    detail::require(v == 1 || v == -1, "SVM labels must be -1 or +1");
    (v > 0 ? pos : neg) = true;
  }
  detail::require(pos && neg, "SVM training needs both classes");
}

// Logistic log-loss of a pair with target t at fApB = A f + B, stable form.
double logistic_loss(double t, double f_ap_b) {
  return f_ap_b >= 0 ? t * f_ap_b + std::log1p(std::exp(-f_ap_b))
                     : (t - 1.0) * f_ap_b + std::log1p(std::exp(f_ap_b));
}

}  // namespace

SigmoidNormalizer::SigmoidNormalizer(std::vector<double> mu, std::vector<double> sigma)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
  detail::require(mu_.size() == sigma_.size(), "normalizer mu/sigma length mismatch");
  for (double s : sigma_) detail::require(s >= kSigmaFloor, "normalizer sigma below floor");
}

SigmoidNormalizer SigmoidNormalizer::fit(const Rows& rows) {
  detail::require(rows.size() >= 2, "normalizer needs at least 2 rows");
  const std::size_t d = rows.front().size();
  std::vector<double> mu(d, 0.0), sigma(d, 0.0);
  for (const auto& r : rows) {
    detail::require(r.size() == d, "rows differ in length");
    for (std::size_t j = 0; j < d; ++j) mu[j] += r[j];
  }
  const double n = double(rows.size());
  for (double& m : mu) m /= n;
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) sigma[j] += (r[j] - mu[j]) * (r[j] - mu[j]);
  for (double& s : sigma) s = std::max(std::sqrt(s / n), kSigmaFloor);
  return SigmoidNormalizer(std::move(mu), std::move(sigma));
}

std::vector<double> SigmoidNormalizer::apply(std::span<const double> x) const {
  detail::require(x.size() == mu_.size(), "normalizer dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = 1.0 / (1.0 + std::exp(-(x[j] - mu_[j]) / sigma_[j]));
  return out;
}

Rows SigmoidNormalizer::apply(const Rows& rows) const {
  Rows out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(apply(r));
  return out;
}

double hik(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size(), "hik dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::min(x[i], y[i]);
  return s;
}

DualSolution solve_dual(const Rows& x, std::span<const int> y, const SvmOptions& opts) {
  detail::require(x.size() == y.size() && !x.empty(), "rows and labels differ in count");
  detail::require(opts.C > 0.0, "C must be positive");
  check_labels(y);
  const std::size_t n = x.size();
  const double c = opts.C;

  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) k[i * n + j] = k[j * n + i] = hik(x[i], x[j]);
  auto q = [&](std::size_t i, std::size_t j) { return double(y[i] * y[j]) * k[i * n + j]; };

  DualSolution sol;
  std::vector<double>& alpha = sol.alpha;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q a - e

  auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < c : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c; };

  for (sol.iterations = 0; sol.iterations < opts.max_iterations; ++sol.iterations) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) gmax = v, i = t;
      if (in_low(t) && v < gmin) gmin = v, j = t;
    }
    if (i == n || j == n || gmax - gmin < opts.tolerance) {
      sol.converged = true;
      break;
    }

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) alpha[j] = 0, alpha[i] = diff;
      } else if (alpha[i] < 0) {
        alpha[i] = 0, alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) alpha[i] = c, alpha[j] = c - diff;
      } else if (alpha[j] > c) {
        alpha[j] = c, alpha[i] = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) alpha[i] = c, alpha[j] = sum - c;
        if (alpha[j] > c) alpha[j] = c, alpha[i] = sum - c;
      } else {
        if (alpha[j] < 0) alpha[j] = 0, alpha[i] = sum;
        if (alpha[i] < 0) alpha[i] = 0, alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
  }

  // Offset from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  int free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / free_count : (ub + lb) / 2.0;
  sol.bias = -rho;

  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (grad[t] - 1.0);
  sol.objective = 0.5 * obj;
  return sol;
}

double SvmModel::decision(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < support_vectors.size(); ++i) f += dual_coef[i] * hik(support_vectors[i], x);
  return f;
}

SvmModel train_svm(const Rows& x, std::span<const int> y, const SvmOptions& opts) {
  const DualSolution sol = solve_dual(x, y, opts);
  SvmModel m;
  m.bias = sol.bias;
  m.C = opts.C;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (sol.alpha[i] <= 0.0) continue;
    m.support_vectors.push_back(x[i]);
    m.dual_coef.push_back(sol.alpha[i] * y[i]);
  }
  return m;
}

double Calibration::probability(double decision) const {
  const double z = A * decision + B;
  return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

Calibration fit_logistic(std::span<const double> decisions, std::span<const int> labels,
                         bool balanced_prior) {
  detail::require(decisions.size() == labels.size() && !labels.empty(),
                  "decisions and labels differ in count");
  const std::size_t n = labels.size();
  double n_pos = 0, n_neg = 0;
  for (int v : labels) (v > 0 ? n_pos : n_neg) += 1.0;
  detail::require(n_pos > 0 && n_neg > 0, "calibration needs both classes");

  const double w_pos = balanced_prior ? double(n) / (2.0 * n_pos) : 1.0;
  const double w_neg = balanced_prior ? double(n) / (2.0 * n_neg) : 1.0;
  const double prior1 = n_pos * w_pos, prior0 = n_neg * w_neg;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);

  std::vector<double> t(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = labels[i] > 0 ? hi : lo;
    w[i] = labels[i] > 0 ? w_pos : w_neg;
  }
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += w[i] * logistic_loss(t[i], decisions[i] * a + b);
    return f;
  };

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10, kSigma = 1e-12, kEps = 1e-5;
  double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = objective(a, b);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decisions[i] * a + b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q, d1 = t[i] - p, f = decisions[i];
      h11 += w[i] * f * f * d2;
      h22 += w[i] * d2;
      h21 += w[i] * f * d2;
      g1 += w[i] * f * d1;
      g2 += w[i] * d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na, b = nb, fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  return {a, b};
}

PlattResult platt_calibrate(const Rows& x, std::span<const int> y, const SvmOptions& opts, int folds,
                            std::uint64_t seed) {
  detail::require(x.size() == y.size(), "rows and labels differ in count");
  detail::require(folds >= 2, "calibration needs at least 2 folds");
  check_labels(y);
  int n_pos = 0, n_neg = 0;
  for (int v : y) (v > 0 ? n_pos : n_neg)++;
  detail::require(n_pos >= folds && n_neg >= folds, "each class needs at least `folds` samples");

  PlattResult res;
  res.fold_of = stratified_folds(y, folds, seed);
  res.oof_decisions.assign(x.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    Rows train_x;
    std::vector<int> train_y;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (res.fold_of[i] != f) train_x.push_back(x[i]), train_y.push_back(y[i]);
    const SvmModel m = train_svm(train_x, train_y, opts);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (res.fold_of[i] == f) res.oof_decisions[i] = m.decision(x[i]);
  }
  res.calibration = fit_logistic(res.oof_decisions, y, true);
  res.svm = train_svm(x, y, opts);
  return res;
}

double CalibratedClassifier::decision(std::span<const double> raw) const {
  detail::require(fitted, "classifier is not fitted");
  return svm.decision(normalizer.apply(raw));
}

double CalibratedClassifier::predict_proba(std::span<const double> raw) const {
  return calibration.probability(decision(raw));
}

double predict_proba(const CalibratedClassifier& m, std::span<const double> raw) {
  return m.predict_proba(raw);
}

FitResult fit_classifier(const Rows& raw, std::span<const int> y, const SvmOptions& opts, int folds,
                         std::uint64_t seed) {
  FitResult out;
  out.model.normalizer = SigmoidNormalizer::fit(raw);
  const Rows x = out.model.normalizer.apply(raw);
  PlattResult pr = platt_calibrate(x, y, opts, folds, seed);
  out.model.svm = std::move(pr.svm);
  out.model.calibration = pr.calibration;
  out.model.seed = seed;
  out.model.folds = folds;
  out.model.fitted = true;
  out.oof_probabilities.reserve(raw.size());
  for (double d : pr.oof_decisions) out.oof_probabilities.push_back(pr.calibration.probability(d));
  return out;
}

}  // namespace dermo::classify
