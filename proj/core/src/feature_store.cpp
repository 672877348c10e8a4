#include "dermo/feature_store.hpp"

#include <bit>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sodium.h>
#include <sstream>

#include "dermo/errors.hpp"
#include "dermo/features.hpp"

namespace dermo::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

std::optional<int> declared_dims(const std::string& name) {
  if (name == features::kColorHist) return features::kColorHistDims;
  if (name == features::kEdgeHist) return features::kEdgeHistDims;
  if (name == features::kMslbp) return features::kMslbpDims;
  if (name == kCaffeFc6) return kCaffeFc6Dims;
  if (name == kDrnConcepts) return kDrnConceptsDims;
  if (name == kUnetShape) return kUnetShapeDims;
  if (name == kScGray || name == kScRgb) return std::nullopt;
  throw ValidationError("unknown feature '" + name + "'");
}

bool is_external_feature(const std::string& name) {
  return name == kCaffeFc6 || name == kDrnConcepts || name == kUnetShape;
}

bool context_allowed(const std::string& name, Context c) {
  declared_dims(name);
  if (name == kDrnConcepts || name == kUnetShape) return c == Context::WI;
  return true;
}

void validate_record(const FeatureRecord& r) {
  if (r.sample_id.empty()) throw ValidationError("feature record has an empty sample_id");
  const auto dims = declared_dims(r.feature_name);
  if (dims && r.vector.size() != std::size_t(*dims)) {
    throw ValidationError(r.sample_id + ": " + r.feature_name + " must have " + std::to_string(*dims) +
                          " dims, got " + std::to_string(r.vector.size()));
  }
  if (r.vector.empty()) throw ValidationError(r.sample_id + ": " + r.feature_name + " vector is empty");
  if (!context_allowed(r.feature_name, r.context)) {
    throw ValidationError(r.sample_id + ": " + r.feature_name + " is only defined for the WI context, got " +
                          to_string(r.context));
  }
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const std::size_t len = sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop the terminator
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    throw ValidationError("malformed base64 payload");
  }
  out.resize(len);
  return out;
}

std::string encode_vector(std::span<const double> v) {
  std::vector<std::uint8_t> bytes(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + std::size_t(b)] = std::uint8_t(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_vector(const std::string& text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw ValidationError("vector payload is not a multiple of 8 bytes");
  std::vector<double> v(bytes.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[i * 8 + std::size_t(b)]) << (8 * b);
    v[i] = std::bit_cast<double>(bits);
  }
  return v;
}

std::string record_to_line(const FeatureRecord& r) {
  const json j = {{"sample_id", r.sample_id},
                  {"context", to_string(r.context)},
                  {"feature_name", r.feature_name},
                  {"dims", r.vector.size()},
                  {"vector_b64", encode_vector(r.vector)}};
  return j.dump();
}

FeatureRecord record_from_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    FeatureRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.context = context_from_string(j.at("context").get<std::string>());
    r.feature_name = j.at("feature_name").get<std::string>();
    r.vector = decode_vector(j.at("vector_b64").get<std::string>());
    if (r.vector.size() != j.at("dims").get<std::size_t>()) {
      throw ValidationError("dims field does not match the decoded vector");
    }
    validate_record(r);
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("feature record: ") + e.what());
  }
}

FeatureStore::FeatureStore(fs::path path) : path_(std::move(path)) {
  if (fs::exists(*path_)) load(*path_);
}

void FeatureStore::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature store " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    FeatureRecord r;
    try {
      r = record_from_line(line);
    } catch (const ValidationError& e) {
      throw ParseError(lineno, path.string() + ": " + e.what());
    }
    data_[{r.sample_id, r.context, r.feature_name}] = std::move(r.vector);
  }
}

void FeatureStore::put(FeatureRecord r) {
  validate_record(r);
  std::unique_lock lock(mu_);
  data_[{r.sample_id, r.context, r.feature_name}] = std::move(r.vector);
}

std::optional<std::vector<double>> FeatureStore::get(const std::string& sample_id, Context c,
                                                     const std::string& feature) const {
  std::shared_lock lock(mu_);
  const auto it = data_.find({sample_id, c, feature});
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

bool FeatureStore::contains(const std::string& sample_id, Context c, const std::string& feature) const {
  std::shared_lock lock(mu_);
  return data_.count({sample_id, c, feature}) > 0;
}

std::size_t FeatureStore::size() const {
  std::shared_lock lock(mu_);
  return data_.size();
}

std::vector<FeatureRecord> FeatureStore::records() const {
  std::shared_lock lock(mu_);
  std::vector<FeatureRecord> out;
  out.reserve(data_.size());
  for (const auto& [key, v] : data_) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
  return out;
}

void FeatureStore::save() const {
  detail::require(path_.has_value(), "feature store has no path");
  save_as(*path_);
}

void FeatureStore::save_as(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    for (const auto& r : records()) out << record_to_line(r) << '\n';
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void FeatureStore::append(FeatureRecord r) {
  detail::require(path_.has_value(), "feature store has no path");
  const std::string line = record_to_line(r);
  put(std::move(r));
  std::unique_lock lock(mu_);
  std::ofstream out(*path_, std::ios::app);
  if (!out) throw IoError("cannot append to " + path_->string());
  out << line << '\n';
}

std::vector<FeatureRecord> parse_external_features(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<FeatureRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      const json j = json::parse(line);
      FeatureRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.context = context_from_string(j.at("context").get<std::string>());
      r.feature_name = j.at("feature_name").get<std::string>();
      if (!is_external_feature(r.feature_name)) {
        throw ValidationError("'" + r.feature_name + "' is not an external feature");
      }
      r.vector = j.at("vector").get<std::vector<double>>();
      validate_record(r);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

std::vector<FeatureRecord> ingest_external_features(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_external_features(ss.str());
}

}  // namespace dermo::pipeline
