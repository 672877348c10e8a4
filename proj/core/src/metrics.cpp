#include "dermo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "dermo/errors.hpp"

namespace dermo::metrics {
namespace {

struct Group {
  double score;
  long pos;
  long neg;
};

// Distinct-score groups in descending score order.
std::vector<Group> descending_groups(std::span<const double> scores, std::span<const int> labels) {
  detail::require(scores.size() == labels.size(), "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Group> groups;
  for (std::size_t idx : order) {
    detail::require(labels[idx] == 0 || labels[idx] == 1, "labels must be 0 or 1");
    detail::require(!std::isnan(scores[idx]), "scores must not be NaN");
    if (groups.empty() || groups.back().score != scores[idx]) groups.push_back({scores[idx], 0, 0});
    (labels[idx] ? groups.back().pos : groups.back().neg) += 1;
  }
  return groups;
}

std::pair<long, long> class_counts(const std::vector<Group>& groups) {
  long p = 0, n = 0;
  for (const auto& g : groups) p += g.pos, n += g.neg;
  return {p, n};
}

double ratio_or_one(long num, long den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 1.0 : double(num) / double(den);
}

}  // namespace

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  const auto groups = descending_groups(scores, labels);
  const auto [p, n] = class_counts(groups);
  detail::require(p > 0, "average precision needs at least one positive");
  double ap = 0.0;
  long tp = 0, seen = 0;
  for (const auto& g : groups) {
    tp += g.pos;
    seen += g.pos + g.neg;
    ap += (double(tp) / double(seen)) * (double(g.pos) / double(p));
  }
  return ap;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  const auto groups = descending_groups(scores, labels);
  const auto [p, n] = class_counts(groups);
  detail::require(p > 0 && n > 0, "ROC needs both classes");
  RocCurve c;
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.fpr.push_back(0.0);
  c.tpr.push_back(0.0);
  long tp = 0, fp = 0;
  for (const auto& g : groups) {
    tp += g.pos;
    fp += g.neg;
    c.thresholds.push_back(g.score);
    c.fpr.push_back(double(fp) / double(n));
    c.tpr.push_back(double(tp) / double(p));
  }
  return c;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const auto groups = descending_groups(scores, labels);
  const auto [p, n] = class_counts(groups);
  detail::require(p > 0 && n > 0, "AUC needs both classes");
  // Walk from the lowest score up, counting negatives strictly below.
  double wins = 0.0;
  long neg_below = 0;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    wins += double(it->pos) * double(neg_below) + 0.5 * double(it->pos) * double(it->neg);
    neg_below += it->neg;
  }
  return wins / (double(p) * double(n));
}

double trapezoid_area(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.fpr.size(); ++i)
    area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) / 2.0;
  return area;
}

Confusion confusion_at_threshold(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
  detail::require(scores.size() == labels.size(), "scores and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    detail::require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) (predicted ? c.tp : c.fn)++;
    else (predicted ? c.fp : c.tn)++;
  }
  const long total = c.tp + c.fp + c.tn + c.fn;
  c.acc = total ? double(c.tp + c.tn) / double(total) : 1.0;
  c.sens = ratio_or_one(c.tp, c.tp + c.fn, c.sens_undefined);
  c.spec = ratio_or_one(c.tn, c.tn + c.fp, c.spec_undefined);
  return c;
}

double spec_at_sens(std::span<const double> scores, std::span<const int> labels, double target) {
  const RocCurve c = roc_curve(scores, labels);
  double best = 0.0;
  for (std::size_t i = 0; i < c.tpr.size(); ++i)
    if (c.tpr[i] >= target - 1e-12) best = std::max(best, 1.0 - c.fpr[i]);
  return best;
}

MetricsReport evaluate_classification(std::span<const double> scores, std::span<const int> labels,
                                      double threshold) {
  MetricsReport r;
  r.threshold = threshold;
  r.ap = average_precision(scores, labels);
  r.auc = roc_auc(scores, labels);
  r.sp95 = spec_at_sens(scores, labels, 0.95);
  r.counts = confusion_at_threshold(scores, labels, threshold);
  r.acc = r.counts.acc;
  r.sens = r.counts.sens;
  r.spec = r.counts.spec;
  return r;
}

SegReport seg_metrics(const MaskImage& pred, const MaskImage& gt) {
  detail::require(pred.width() == gt.width() && pred.height() == gt.height(),
                  "masks differ in dimensions");
  detail::require(pred.is_binary() && gt.is_binary(), "segmentation metrics need binary masks");
  SegReport r;
  const auto p = pred.values(), g = gt.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pp = p[i] == 255, gg = g[i] == 255;
    if (gg) (pp ? r.tp : r.fn)++;
    else (pp ? r.fp : r.tn)++;
  }
  r.jaccard = ratio_or_one(r.tp, r.tp + r.fp + r.fn, r.jaccard_undefined);
  r.acc = double(r.tp + r.tn) / double(p.size());
  r.sens = ratio_or_one(r.tp, r.tp + r.fn, r.sens_undefined);
  r.spec = ratio_or_one(r.tn, r.tn + r.fp, r.spec_undefined);
  return r;
}

using nlohmann::json;

std::string report_to_json(const MetricsReport& r) {
  json j = {{"ap", r.ap},     {"auc", r.auc},   {"acc", r.acc},
            {"sens", r.sens}, {"spec", r.spec}, {"sp95", r.sp95},
            {"threshold", r.threshold},
            {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}},
            {"sens_undefined", r.counts.sens_undefined},
            {"spec_undefined", r.counts.spec_undefined}};
  return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MetricsReport r;
    r.ap = j.at("ap");
    r.auc = j.at("auc");
    r.acc = j.at("acc");
    r.sens = j.at("sens");
    r.spec = j.at("spec");
    r.sp95 = j.at("sp95");
    r.threshold = j.at("threshold");
    const json& c = j.at("counts");
    r.counts.tp = c.at("tp");
    r.counts.fp = c.at("fp");
    r.counts.tn = c.at("tn");
    r.counts.fn = c.at("fn");
    r.counts.acc = r.acc;
    r.counts.sens = r.sens;
    r.counts.spec = r.spec;
    r.counts.sens_undefined = j.value("sens_undefined", false);
    r.counts.spec_undefined = j.value("spec_undefined", false);
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("metrics report: ") + e.what());
  }
}

std::string seg_report_to_json(const SegReport& r) {
  json j = {{"jaccard", r.jaccard}, {"acc", r.acc}, {"sens", r.sens}, {"spec", r.spec},
            {"counts", {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}}},
            {"jaccard_undefined", r.jaccard_undefined},
            {"sens_undefined", r.sens_undefined},
            {"spec_undefined", r.spec_undefined}};
  return j.dump(2);
}

std::string roc_to_csv(const RocCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    if (std::isinf(curve.thresholds[i])) out << "inf";
    else out << curve.thresholds[i];
    out << ',' << curve.fpr[i] << ',' << curve.tpr[i] << '\n';
  }
  return out.str();
}

RocCurve roc_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != "threshold,fpr,tpr") throw ParseError(1, "bad ROC header");
  RocCurve c;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t, f, p;
    if (!std::getline(row, t, ',') || !std::getline(row, f, ',') || !std::getline(row, p)) {
      throw ParseError(lineno, "expected 3 columns");
    }
    try {
      c.thresholds.push_back(t == "inf" ? std::numeric_limits<double>::infinity() : std::stod(t));
      c.fpr.push_back(std::stod(f));
      c.tpr.push_back(std::stod(p));
    } catch (const std::exception&) {
      throw ParseError(lineno, "non-numeric ROC value");
    }
  }
  return c;
}

}  // namespace dermo::metrics
