#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "dermo/manifest.hpp"

namespace dermo::pipeline {

struct FeatureRecord {
  std::string sample_id;
  Context context = Context::WI;
  std::string feature_name;
  std::vector<double> vector;
};

// Externally computed deep features.
inline constexpr const char* kCaffeFc6 = "caffe_fc6";
inline constexpr const char* kDrnConcepts = "drn_concepts";
inline constexpr const char* kUnetShape = "unet_shape";
inline constexpr int kCaffeFc6Dims = 4096;
inline constexpr int kDrnConceptsDims = 1000;
inline constexpr int kUnetShapeDims = 1024;

// Sparse-code features; their width is the dictionary size.
inline constexpr const char* kScGray = "sc_gray";
inline constexpr const char* kScRgb = "sc_rgb";

/// Fixed length of a feature, or nullopt when it depends on a dictionary.
/// Unknown names are a ValidationError.
std::optional<int> declared_dims(const std::string& feature_name);
bool is_external_feature(const std::string& feature_name);
/// Whether the feature may be computed on the given context.
bool context_allowed(const std::string& feature_name, Context c);
/// Throws ValidationError if the record violates the dims or context rules.
void validate_record(const FeatureRecord& r);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);
/// Little-endian IEEE-754 doubles, base64 encoded.
std::string encode_vector(std::span<const double> v);
std::vector<double> decode_vector(const std::string& text);

/// One newline-delimited JSON object:
/// {"sample_id","context","feature_name","dims","vector_b64"}.
std::string record_to_line(const FeatureRecord& r);
FeatureRecord record_from_line(const std::string& line);

/// Records keyed by (sample_id, context, feature_name). Readers may run
/// concurrently with one writer. Later records replace earlier ones with the
/// same key, which lets the on-disk file be append-only.
class FeatureStore {
 public:
  using Key = std::tuple<std::string, Context, std::string>;

  FeatureStore() = default;
  /// Loads `path` if it exists; save() and append() write back to it.
  explicit FeatureStore(std::filesystem::path path);

  void put(FeatureRecord r);
  std::optional<std::vector<double>> get(const std::string& sample_id, Context c,
                                         const std::string& feature) const;
  bool contains(const std::string& sample_id, Context c, const std::string& feature) const;
  std::size_t size() const;
  std::vector<FeatureRecord> records() const;

  /// Rewrites the whole file in key order.
  void save() const;
  void save_as(const std::filesystem::path& path) const;
  /// Stores the record and appends its line to the file.
  void append(FeatureRecord r);
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  void load(const std::filesystem::path& path);

  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::map<Key, std::vector<double>> data_;
};

/// Reads externally produced records, one JSON object per line:
/// {"sample_id", "context", "feature_name", "vector": [reals]}.
std::vector<FeatureRecord> parse_external_features(const std::string& text);
std::vector<FeatureRecord> ingest_external_features(const std::filesystem::path& path);

}  // namespace dermo::pipeline
