#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dermo/imaging.hpp"

namespace dermo::metrics {

// Labels are 0 / 1 throughout. Tied scores are always grouped and enter the
// ranking together; no tie is ever broken arbitrarily.

/// Step integral of the precision-recall curve over descending score groups.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct RocCurve {
  std::vector<double> thresholds;  // +inf first, then distinct scores descending
  std::vector<double> fpr;
  std::vector<double> tpr;
};

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);
/// Mann-Whitney statistic P(s+ > s-) + 0.5 P(s+ = s-).
double roc_auc(std::span<const double> scores, std::span<const int> labels);
/// Trapezoidal area under a curve.
double trapezoid_area(const RocCurve& curve);

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double acc = 0.0, sens = 0.0, spec = 0.0;
  /// Set when the corresponding denominator was zero; the value is then 1.0.
  bool sens_undefined = false;
  bool spec_undefined = false;
};

/// Predicted positive iff score >= threshold.
Confusion confusion_at_threshold(std::span<const double> scores, std::span<const int> labels,
                                 double threshold = 0.5);

/// Best specificity among empirical ROC operating points whose sensitivity is
/// at least `target` (no interpolation).
double spec_at_sens(std::span<const double> scores, std::span<const int> labels,
                    double target = 0.95);

struct MetricsReport {
  double ap = 0.0, auc = 0.0, acc = 0.0, sens = 0.0, spec = 0.0, sp95 = 0.0;
  double threshold = 0.5;
  Confusion counts;
};

MetricsReport evaluate_classification(std::span<const double> scores, std::span<const int> labels,
                                      double threshold = 0.5);

struct SegReport {
  double jaccard = 0.0, acc = 0.0, sens = 0.0, spec = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  bool jaccard_undefined = false;  // both masks empty
  bool sens_undefined = false;
  bool spec_undefined = false;
};

/// Pixel-wise comparison of two binary masks (255 = lesion).
SegReport seg_metrics(const MaskImage& pred, const MaskImage& gt);

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text);
std::string seg_report_to_json(const SegReport& r);

/// "threshold,fpr,tpr" rows; the +inf threshold is written as "inf".
std::string roc_to_csv(const RocCurve& curve);
RocCurve roc_from_csv(const std::string& text);

}  // namespace dermo::metrics
