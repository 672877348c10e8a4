#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dermo::ensemble {

struct Component {
  std::string feature;
  std::string context;

  /// "CONTEXT:feature", e.g. "WI:mslbp".
  std::string key() const { return context + ":" + feature; }
  static Component from_key(const std::string& key);
  bool operator==(const Component&) const = default;
};

/// Calibrated scores, one row per sample and one column per component.
struct ScoreTable {
  std::vector<std::string> sample_ids;
  std::vector<Component> components;
  std::vector<std::vector<double>> scores;  // [sample][component], each in [0, 1]
  std::optional<std::vector<int>> labels;

  std::size_t n_samples() const noexcept { return sample_ids.size(); }
  std::size_t n_components() const noexcept { return components.size(); }
  std::vector<double> column(std::size_t component) const;
  /// Throws ContractError on inconsistent shapes or out-of-range values.
  void validate() const;
};

std::vector<double> average_fusion(const ScoreTable& t, std::span<const std::size_t> subset);
/// Fraction of subset components scoring >= threshold.
std::vector<double> vote_fusion(const ScoreTable& t, std::span<const std::size_t> subset,
                                double threshold = 0.5);

enum class FusionMode { Average, Vote };
FusionMode fusion_mode_from_string(const std::string& s);  // "avg" / "vote", any case
std::string to_string(FusionMode m);
std::vector<double> fuse(const ScoreTable& t, std::span<const std::size_t> subset, FusionMode mode);

struct SelectionOptions {
  int folds = 3;
  std::uint64_t seed = 0;
  /// Worker threads for candidate evaluation; results do not depend on it.
  int threads = 1;
};

/// Mean of per-fold AP over a seeded stratified split. With folds == 1 the
/// pooled AP is returned. Every fold must contain both classes.
double cv_average_precision(std::span<const double> scores, std::span<const int> labels,
                            std::span<const int> fold_of, int folds);

struct GreedyStep {
  std::size_t component = 0;
  std::string key;
  double individual_ap = 0.0;
  double cumulative_ap = 0.0;
  bool selected = false;
};

struct ForwardStep {
  int iteration = 0;
  std::size_t component = 0;
  std::string key;
  double ap = 0.0;
  bool chosen = false;
};

struct GreedyResult {
  std::vector<std::size_t> subset;
  std::vector<GreedyStep> trace;
  double ap = 0.0;
};

struct ForwardResult {
  std::vector<std::size_t> subset;
  std::vector<ForwardStep> trace;
  double ap = 0.0;
};

GreedyResult greedy_selection(const ScoreTable& t, const SelectionOptions& opts = {});
ForwardResult forward_selection(const ScoreTable& t, const SelectionOptions& opts = {});

/// "rank,component,individual_ap,cumulative_ap,selected"
std::string greedy_trace_csv(const GreedyResult& r);
/// "iteration,component,ap,chosen"
std::string forward_trace_csv(const ForwardResult& r);

/// "sample_id,label,<key>..." with an empty label cell when labels are absent.
std::string score_table_to_csv(const ScoreTable& t);
ScoreTable score_table_from_csv(const std::string& text);

}  // namespace dermo::ensemble
