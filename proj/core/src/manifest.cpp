#include "dermo/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <spdlog/spdlog.h>
#include <sstream>

#include "dermo/errors.hpp"
#include "dermo/random.hpp"

namespace dermo::pipeline {
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out(1);
  for (char ch : line) {
    if (ch == ',') out.emplace_back();
    else out.back() += ch;
  }
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

MaskImage mask_for(const fs::path& path, const ImageTensor& img) {
  MaskImage m = read_mask(path);
  if (m.width() != img.width() || m.height() != img.height()) {
    spdlog::debug("resizing mask {} to {}x{}", path.string(), img.width(), img.height());
    m = resize_nearest(m, img.width(), img.height());
  }
  return m;
}

ImageTensor crop_or_whole(const ManifestEntry& e, const ImageTensor& whole, const fs::path& mask_path,
                          Context ctx) {
  try {
    return crop(whole, mask_bbox(mask_for(mask_path, whole)));
  } catch (const EmptyMaskError&) {
    spdlog::warn("{}: {} mask {} is empty, using the whole image", e.sample_id, to_string(ctx),
                 mask_path.string());
    return whole;
  }
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "validation") return Split::Validation;
  if (s == "test") return Split::Test;
  throw ValidationError("split must be train, validation or test, got '" + s + "'");
}

std::string to_string(Context c) {
  switch (c) {
    case Context::WI: return "WI";
    case Context::CR: return "CR";
    case Context::CRGT: return "CRGT";
  }
  return "?";
}

Context context_from_string(const std::string& s) {
  if (s == "WI") return Context::WI;
  if (s == "CR") return Context::CR;
  if (s == "CRGT") return Context::CRGT;
  throw ValidationError("context must be WI, CR or CRGT, got '" + s + "'");
}

std::vector<ManifestEntry> parse_manifest(const std::string& text, const fs::path& base_dir) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || trim(line) != kManifestHeader) {
    throw ParseError(1, std::string("manifest header must be ") + kManifestHeader);
  }
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  auto existing = [&](const std::string& column, const std::string& value) {
    const fs::path p = resolve(base_dir, value);
    if (!fs::exists(p)) throw ParseError(lineno, column + " does not exist: " + p.string());
    return p;
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) throw ParseError(lineno, "expected 6 columns, found " + std::to_string(f.size()));
    ManifestEntry e;
    e.sample_id = trim(f[0]);
    if (e.sample_id.empty()) throw ParseError(lineno, "sample_id is empty");
    if (!seen.insert(e.sample_id).second) {
      throw ParseError(lineno, "duplicate sample_id '" + e.sample_id + "'");
    }
    const std::string image = trim(f[1]);
    if (image.empty()) throw ParseError(lineno, "image_path is empty");
    e.image_path = existing("image_path", image);
    if (const auto m = trim(f[2]); !m.empty()) e.mask_path = existing("mask_path", m);
    if (const auto m = trim(f[3]); !m.empty()) e.pred_mask_path = existing("pred_mask_path", m);
    const std::string label = trim(f[4]);
    if (label == "0" || label == "1") e.label = label == "1";
    else if (!label.empty()) throw ParseError(lineno, "label must be 0 or 1");
    try {
      e.split = split_from_string(trim(f[5]));
    } catch (const ValidationError& err) {
      throw ParseError(lineno, err.what());
    }
    if (e.split != Split::Test && !e.label) {
      throw ParseError(lineno, to_string(e.split) + " entries need a label");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string manifest_to_csv(const std::vector<ManifestEntry>& entries) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& e : entries) {
    out += e.sample_id + "," + e.image_path.string() + "," + (e.mask_path ? e.mask_path->string() : "") +
           "," + (e.pred_mask_path ? e.pred_mask_path->string() : "") + "," +
           (e.label ? std::to_string(*e.label) : "") + "," + to_string(e.split) + "\n";
  }
  return out;
}

void assign_validation_split(std::vector<ManifestEntry>& entries, double fraction, std::uint64_t seed) {
  detail::require(fraction >= 0.0 && fraction < 1.0, "validation fraction must lie in [0, 1)");
  if (fraction == 0.0) return;
  Rng rng(seed);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].split == Split::Train && entries[i].label == cls) members.push_back(i);
    rng.shuffle(members);
    const auto take = std::size_t(std::llround(fraction * double(members.size())));
    for (std::size_t k = 0; k < take; ++k) entries[members[k]].split = Split::Validation;
  }
}

std::map<Context, ImageTensor> build_contexts(const ManifestEntry& entry) {
  std::vector<Context> wanted{Context::WI};
  if (entry.pred_mask_path) wanted.push_back(Context::CR);
  if (entry.mask_path) wanted.push_back(Context::CRGT);
  return build_contexts(entry, wanted);
}

std::map<Context, ImageTensor> build_contexts(const ManifestEntry& entry, const std::vector<Context>& wanted) {
  const ImageTensor whole = read_image(entry.image_path);
  std::map<Context, ImageTensor> out;
  for (Context c : wanted) {
    if (out.count(c)) continue;
    switch (c) {
      case Context::WI:
        out.emplace(c, whole);
        break;
      case Context::CR:
        if (!entry.pred_mask_path) throw ValidationError(entry.sample_id + ": CR context needs pred_mask_path");
        out.emplace(c, crop_or_whole(entry, whole, *entry.pred_mask_path, c));
        break;
      case Context::CRGT:
        if (!entry.mask_path) throw ValidationError(entry.sample_id + ": CRGT context needs mask_path");
        out.emplace(c, crop_or_whole(entry, whole, *entry.mask_path, c));
        break;
    }
  }
  return out;
}

}  // namespace dermo::pipeline
