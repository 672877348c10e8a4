#include <algorithm>
#include <cctype>
#include <map>
#include <spdlog/spdlog.h>

#include "dermo/errors.hpp"
#include "dermo/experiment.hpp"
#include "dermo/nettopo.hpp"

namespace dermo::pipeline {
namespace fs = std::filesystem;

namespace {

bool is_mask_file(const fs::directory_entry& e) {
  if (!e.is_regular_file()) return false;
  const auto ext = e.path().extension().string();
  return ext == ".png" || ext == ".pgm";
}

// "ISIC_0001_3" -> "ISIC_0001"; stems without a numeric suffix are their own group.
std::string group_of(const std::string& stem) {
  const auto pos = stem.rfind('_');
  if (pos == std::string::npos || pos == 0 || pos + 1 == stem.size()) return stem;
  const bool digits = std::all_of(stem.begin() + std::ptrdiff_t(pos + 1), stem.end(),
                                  [](unsigned char ch) { return std::isdigit(ch); });
  return digits ? stem.substr(0, pos) : stem;
}

}  // namespace

std::size_t segment_fuse_dir(const fs::path& mask_dir, const fs::path& out_dir) {
  if (!fs::is_directory(mask_dir)) throw IoError("mask directory does not exist: " + mask_dir.string());
  std::map<std::string, std::vector<fs::path>> groups;
  for (const auto& e : fs::directory_iterator(mask_dir)) {
    if (e.is_directory()) {
      auto& files = groups[e.path().filename().string()];
      for (const auto& inner : fs::directory_iterator(e.path()))
        if (is_mask_file(inner)) files.push_back(inner.path());
    } else if (is_mask_file(e)) {
      groups[group_of(e.path().stem().string())].push_back(e.path());
    }
  }
  fs::create_directories(out_dir);
  std::size_t written = 0;
  for (auto& [sample, files] : groups) {
    if (files.empty()) {
      spdlog::warn("{}: no masks, skipped", sample);
      continue;
    }
    std::sort(files.begin(), files.end());
    std::vector<MaskImage> masks;
    for (const auto& f : files) {
      masks.push_back(read_mask(f));
      if (masks.back().width() != masks.front().width() || masks.back().height() != masks.front().height()) {
        throw ValidationError(sample + ": mask " + f.filename().string() + " differs in dimensions from " +
                              files.front().filename().string());
      }
    }
    write_mask_png(out_dir / (sample + ".png"), nettopo::fuse_masks(masks));
    ++written;
  }
  return written;
}

}  // namespace dermo::pipeline
