#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dermo/feature_store.hpp"
#include "dermo/imaging.hpp"
#include "dermo/manifest.hpp"
#include "dermo/sparse.hpp"

namespace dermo::pipeline {

struct ExtractOptions {
  /// Long side for hand-coded features; 0 keeps the native size.
  int working_long_side = 256;
  int min_short_side = 16;
  std::optional<std::filesystem::path> sc_gray_dictionary;
  std::optional<std::filesystem::path> sc_rgb_dictionary;
  double lambda = sparse::kDefaultLambda;
};

/// Rescales so the longer side equals long_side, keeping the aspect ratio
/// and never letting the short side drop below min_short_side.
ImageTensor to_working_resolution(const ImageTensor& img, int long_side, int min_short_side);

/// Computes the in-process features. Sparse-code features need their
/// dictionary; external features cannot be computed here.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const ExtractOptions& opts);

  bool can_compute(const std::string& feature) const;
  std::vector<double> compute(const std::string& feature, const ImageTensor& rgb) const;
  const ExtractOptions& options() const noexcept { return opts_; }

 private:
  ExtractOptions opts_;
  std::shared_ptr<const sparse::LassoSolver> sc_gray_;
  std::shared_ptr<const sparse::LassoSolver> sc_rgb_;
};

struct ExtractRequest {
  std::vector<Context> contexts;
  std::vector<std::string> features;
  /// Recompute records already present in the store.
  bool overwrite = false;
  /// 0 means one worker per hardware thread.
  int threads = 0;
};

/// Fills the store with every computable (entry, context, feature) record
/// the request names; external features are skipped. Returns the number of
/// records computed.
std::size_t extract_features(const std::vector<ManifestEntry>& entries, const ExtractRequest& req,
                             const FeatureExtractor& extractor, FeatureStore& store);

int resolve_threads(int requested);

}  // namespace dermo::pipeline
