#include "dermo/ensemble.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dermo/errors.hpp"
#include "dermo/metrics.hpp"
#include "dermo/random.hpp"
#include "parallel.hpp"

namespace dermo::ensemble {
namespace {

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Evaluator {
  const ScoreTable& table;
  std::vector<int> fold_of;
  int folds;

  double ap_of(std::span<const std::size_t> subset) const {
    const auto fused = average_fusion(table, subset);
    return cv_average_precision(fused, *table.labels, fold_of, folds);
  }
};

Evaluator make_evaluator(const ScoreTable& t, const SelectionOptions& opts) {
  t.validate();
  detail::require(t.labels.has_value(), "selection needs labels");
  detail::require(t.n_components() > 0, "selection needs at least one component");
  detail::require(opts.folds >= 1, "folds must be positive");
  return {t, stratified_folds(*t.labels, opts.folds, opts.seed), opts.folds};
}

}  // namespace

Component Component::from_key(const std::string& key) {
  const auto colon = key.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == key.size()) {
    throw ValidationError("component key must look like CONTEXT:feature, got '" + key + "'");
  }
  return {key.substr(colon + 1), key.substr(0, colon)};
}

std::vector<double> ScoreTable::column(std::size_t component) const {
  detail::require(component < n_components(), "component index out of range");
  std::vector<double> col(n_samples());
  for (std::size_t i = 0; i < n_samples(); ++i) col[i] = scores[i][component];
  return col;
}

void ScoreTable::validate() const {
  detail::require(scores.size() == sample_ids.size(), "score rows do not match sample ids");
  for (const auto& row : scores) {
    detail::require(row.size() == components.size(), "score row width does not match components");
    for (double v : row) detail::require(v >= 0.0 && v <= 1.0, "scores must lie in [0, 1]");
  }
  if (labels) {
    detail::require(labels->size() == sample_ids.size(), "labels do not match sample ids");
    for (int l : *labels) detail::require(l == 0 || l == 1, "labels must be 0 or 1");
  }
}

std::vector<double> average_fusion(const ScoreTable& t, std::span<const std::size_t> subset) {
  detail::require(!subset.empty(), "fusion subset is empty");
  for (std::size_t c : subset) detail::require(c < t.n_components(), "component index out of range");
  std::vector<double> out(t.n_samples());
  for (std::size_t i = 0; i < t.n_samples(); ++i) {
    double sum = 0.0;
    for (std::size_t c : subset) sum += t.scores[i][c];
    out[i] = sum / double(subset.size());
  }
  return out;
}

std::vector<double> vote_fusion(const ScoreTable& t, std::span<const std::size_t> subset,
                                double threshold) {
  detail::require(!subset.empty(), "fusion subset is empty");
  for (std::size_t c : subset) detail::require(c < t.n_components(), "component index out of range");
  std::vector<double> out(t.n_samples());
  for (std::size_t i = 0; i < t.n_samples(); ++i) {
    std::size_t votes = 0;
    for (std::size_t c : subset) votes += t.scores[i][c] >= threshold;
    out[i] = double(votes) / double(subset.size());
  }
  return out;
}

FusionMode fusion_mode_from_string(const std::string& s) {
  std::string lower(s);
  for (auto& ch : lower) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "avg" || lower == "average") return FusionMode::Average;
  if (lower == "vote") return FusionMode::Vote;
  throw ValidationError("unknown fusion mode '" + s + "' (expected avg or vote)");
}

std::string to_string(FusionMode m) { return m == FusionMode::Average ? "avg" : "vote"; }

std::vector<double> fuse(const ScoreTable& t, std::span<const std::size_t> subset, FusionMode mode) {
  return mode == FusionMode::Average ? average_fusion(t, subset) : vote_fusion(t, subset);
}

double cv_average_precision(std::span<const double> scores, std::span<const int> labels,
                            std::span<const int> fold_of, int folds) {
  detail::require(scores.size() == labels.size() && labels.size() == fold_of.size(),
                  "scores, labels and folds differ in length");
  if (folds == 1) return metrics::average_precision(scores, labels);
  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<double> s;
    std::vector<int> l;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (fold_of[i] != f) continue;
      s.push_back(scores[i]);
      l.push_back(labels[i]);
    }
    const bool has_pos = std::find(l.begin(), l.end(), 1) != l.end();
    const bool has_neg = std::find(l.begin(), l.end(), 0) != l.end();
    detail::require(has_pos && has_neg, "fold " + std::to_string(f) + " lacks one of the classes");
    total += metrics::average_precision(s, l);
  }
  return total / double(folds);
}

GreedyResult greedy_selection(const ScoreTable& t, const SelectionOptions& opts) {
  const Evaluator eval = make_evaluator(t, opts);
  const std::size_t n = t.n_components();

  std::vector<double> individual(n);
  detail::parallel_for(n, opts.threads, [&](std::size_t c) {
    const std::size_t one[] = {c};
    individual[c] = eval.ap_of(one);
  });

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (individual[a] != individual[b]) return individual[a] > individual[b];
    return t.components[a].key() < t.components[b].key();
  });

  std::vector<double> cumulative(n);
  detail::parallel_for(n, opts.threads, [&](std::size_t k) {
    cumulative[k] = eval.ap_of(std::span<const std::size_t>(order.data(), k + 1));
  });

  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (cumulative[k] > cumulative[best]) best = k;

  GreedyResult r;
  r.subset.assign(order.begin(), order.begin() + std::ptrdiff_t(best + 1));
  r.ap = cumulative[best];
  for (std::size_t k = 0; k < n; ++k) {
    r.trace.push_back({order[k], t.components[order[k]].key(), individual[order[k]], cumulative[k], k <= best});
  }
  return r;
}

ForwardResult forward_selection(const ScoreTable& t, const SelectionOptions& opts) {
  constexpr double kMinGain = 1e-12;
  const Evaluator eval = make_evaluator(t, opts);
  const std::size_t n = t.n_components();

  ForwardResult r;
  r.ap = -std::numeric_limits<double>::infinity();
  std::vector<bool> used(n, false);
  for (int iteration = 1; r.subset.size() < n; ++iteration) {
    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < n; ++c)
      if (!used[c]) candidates.push_back(c);

    std::vector<double> ap(candidates.size());
    detail::parallel_for(candidates.size(), opts.threads, [&](std::size_t i) {
      std::vector<std::size_t> trial = r.subset;
      trial.push_back(candidates[i]);
      ap[i] = eval.ap_of(trial);
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      const bool better = ap[i] > ap[best] ||
                          (ap[i] == ap[best] && t.components[candidates[i]].key() <
                                                    t.components[candidates[best]].key());
      if (better) best = i;
    }
    const bool improves = ap[best] > r.ap + kMinGain;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      r.trace.push_back({iteration, candidates[i], t.components[candidates[i]].key(), ap[i],
                         improves && i == best});
    }
    if (!improves) break;
    r.subset.push_back(candidates[best]);
    used[candidates[best]] = true;
    r.ap = ap[best];
  }
  return r;
}

std::string greedy_trace_csv(const GreedyResult& r) {
  std::string out = "rank,component,individual_ap,cumulative_ap,selected\n";
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const auto& s = r.trace[k];
    out += std::to_string(k + 1) + "," + s.key + "," + fmt_real(s.individual_ap) + "," +
           fmt_real(s.cumulative_ap) + "," + (s.selected ? "1" : "0") + "\n";
  }
  return out;
}

std::string forward_trace_csv(const ForwardResult& r) {
  std::string out = "iteration,component,ap,chosen\n";
  for (const auto& s : r.trace) {
    out += std::to_string(s.iteration) + "," + s.key + "," + fmt_real(s.ap) + "," +
           (s.chosen ? "1" : "0") + "\n";
  }
  return out;
}

std::string score_table_to_csv(const ScoreTable& t) {
  std::string out = "sample_id,label";
  for (const auto& c : t.components) out += "," + c.key();
  out += "\n";
  for (std::size_t i = 0; i < t.n_samples(); ++i) {
    out += t.sample_ids[i] + "," + (t.labels ? std::to_string((*t.labels)[i]) : std::string());
    for (double v : t.scores[i]) out += "," + fmt_real(v);
    out += "\n";
  }
  return out;
}

ScoreTable score_table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty score table");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label") {
    throw ParseError(1, "score table header must start with sample_id,label and name components");
  }
  ScoreTable t;
  for (std::size_t c = 2; c < header.size(); ++c) t.components.push_back(Component::from_key(header[c]));

  std::vector<int> labels;
  bool any_label = false, any_missing = false;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " columns");
    }
    t.sample_ids.push_back(cells[0]);
    if (cells[1].empty()) {
      any_missing = true;
    } else if (cells[1] == "0" || cells[1] == "1") {
      any_label = true;
      labels.push_back(cells[1] == "1");
    } else {
      throw ParseError(lineno, "label must be 0 or 1");
    }
    std::vector<double> row;
    for (std::size_t c = 2; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || *end != '\0') throw ParseError(lineno, "non-numeric score");
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError(lineno, "score outside [0, 1]");
      row.push_back(v);
    }
    t.scores.push_back(std::move(row));
  }
  if (any_label && any_missing) throw ValidationError("score table mixes labeled and unlabeled rows");
  if (any_label) t.labels = std::move(labels);
  return t;
}

}  // namespace dermo::ensemble
