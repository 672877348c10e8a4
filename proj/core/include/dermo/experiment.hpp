#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dermo/augment.hpp"
#include "dermo/classify.hpp"
#include "dermo/ensemble.hpp"
#include "dermo/extract.hpp"
#include "dermo/feature_store.hpp"
#include "dermo/manifest.hpp"
#include "dermo/metrics.hpp"

namespace dermo::pipeline {

enum class SelectionMode { None, Greedy, Forward };
std::string to_string(SelectionMode m);
SelectionMode selection_mode_from_string(const std::string& s);

struct ExperimentConfig {
  /// Feature names per context; every (context, feature) pair is a component.
  std::map<Context, std::vector<std::string>> features;
  double svm_c = 1.0;
  /// Per-component C keyed by "CONTEXT:feature".
  std::map<std::string, double> svm_c_overrides;
  ensemble::FusionMode fusion = ensemble::FusionMode::Average;
  SelectionMode selection = SelectionMode::None;
  /// Cross-validation folds for component selection.
  int folds = 3;
  /// Folds for the out-of-fold decisions behind calibration.
  int calibration_folds = 3;
  std::uint64_t seed = 0;
  /// 0 means one worker per hardware thread.
  int threads = 0;
  /// Share of train entries moved to a seeded stratified validation split.
  double validation_fraction = 0.0;
  double threshold = 0.5;
  ExtractOptions extract;
  augment::AugmentRanges augmentation;

  std::vector<ensemble::Component> components() const;
  double c_for(const ensemble::Component& c) const;
  /// Checks value ranges, feature/context pairing and that referenced files exist.
  void validate() const;
};

/// Relative dictionary paths resolve against base_dir.
ExperimentConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Staged access to labels: train labels are always readable; validation and
/// test labels only after open_evaluation(). Every read is reported to the
/// observer, if one is set.
class LabelVault {
 public:
  enum class Phase { Training, Evaluation };
  struct Access {
    Split split;
    Phase phase;
    std::size_t count;
  };

  explicit LabelVault(const std::vector<ManifestEntry>& entries);

  /// Labels of the given ids, which must all belong to `split`.
  std::vector<int> labels(const std::vector<std::string>& ids, Split split) const;
  bool has_labels(const std::vector<std::string>& ids) const;
  void open_evaluation();
  Phase phase() const noexcept { return phase_; }
  void set_observer(std::function<void(const Access&)> observer) { observer_ = std::move(observer); }

 private:
  std::map<std::string, std::pair<Split, std::optional<int>>> entries_;
  Phase phase_ = Phase::Training;
  std::function<void(const Access&)> observer_;
};

/// Rows of one component for the given ids; throws ValidationError naming the
/// first missing record.
classify::Rows gather_rows(const FeatureStore& store, const std::vector<std::string>& ids,
                           const ensemble::Component& component);

struct TrainedComponents {
  std::vector<classify::CalibratedClassifier> models;
  /// Calibrated out-of-fold probabilities of the training samples.
  ensemble::ScoreTable oof;
};

struct TrainOptions {
  int calibration_folds = 3;
  std::uint64_t seed = 0;
  int threads = 0;
};

/// One calibrated classifier per component, trained concurrently.
TrainedComponents train_components(const std::vector<ensemble::Component>& components,
                                   const std::function<double(const ensemble::Component&)>& c_for,
                                   const std::vector<std::string>& ids, const std::vector<int>& labels,
                                   const FeatureStore& store, const TrainOptions& opts);

/// Probabilities of each model for each id (labels left empty).
ensemble::ScoreTable predict_components(const std::vector<classify::CalibratedClassifier>& models,
                                        const std::vector<std::string>& ids, const FeatureStore& store,
                                        int threads = 0);

void save_models(const std::filesystem::path& dir, const std::vector<classify::CalibratedClassifier>& models);
std::vector<classify::CalibratedClassifier> load_models(const std::filesystem::path& dir);

struct SplitResult {
  std::string name;  // "train_cv", "validation" or "test"
  ensemble::ScoreTable table;
  std::vector<double> fused;
  std::optional<metrics::MetricsReport> report;
  std::optional<metrics::RocCurve> roc;
};

struct ExperimentResult {
  std::vector<ensemble::Component> components;
  std::vector<std::size_t> subset;
  std::optional<ensemble::GreedyResult> greedy;
  std::optional<ensemble::ForwardResult> forward;
  std::vector<classify::CalibratedClassifier> models;
  std::vector<ManifestEntry> entries;  // with the final split assignment
  std::vector<SplitResult> splits;
};

struct ExperimentHooks {
  std::function<void(const std::string& stage)> on_stage;
  std::function<void(const LabelVault::Access&)> on_label_read;
};

/// Validates inputs, extracts missing features into the store, trains every
/// component, selects and fuses on the training out-of-fold scores, then
/// scores and evaluates the held-out splits.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::vector<ManifestEntry> entries,
                                FeatureStore& store, const ExperimentHooks& hooks = {});

/// report.json, splits.csv, scores_<split>.csv, fused_<split>.csv,
/// roc_<split>.csv, selection_trace.csv and models/.
void write_bundle(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir);

/// "sample_id,label,score"
std::string fused_to_csv(const ensemble::ScoreTable& table, const std::vector<double>& fused);
/// Reads fused_to_csv output as a one-component table keyed "fused:score".
ensemble::ScoreTable fused_from_csv(const std::string& text);

/// Fuses confidence masks per sample. A sample is either a subdirectory of
/// mask_dir holding its masks, or a group of files named <sample>_<k>.png.
/// Writes <out_dir>/<sample>.png and returns the number of samples.
std::size_t segment_fuse_dir(const std::filesystem::path& mask_dir, const std::filesystem::path& out_dir);

}  // namespace dermo::pipeline
