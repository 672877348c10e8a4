#include "dermo/extract.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>
#include <thread>

#include "dermo/errors.hpp"
#include "dermo/features.hpp"
#include "parallel.hpp"

namespace dermo::pipeline {
namespace {

std::shared_ptr<const sparse::LassoSolver> load_solver(const std::optional<std::filesystem::path>& path,
                                                       const char* feature) {
  if (!path) return nullptr;
  auto dict = sparse::load_dictionary(*path);
  if ((feature == std::string(kScGray)) != (dict.colorspace() == ColorSpace::GRAY)) {
    throw ValidationError(std::string(feature) + " dictionary " + path->string() + " has colorspace " +
                          std::string(to_string(dict.colorspace())));
  }
  return std::make_shared<const sparse::LassoSolver>(dict);
}

ImageTensor in_colorspace(const ImageTensor& rgb, ColorSpace cs) {
  switch (cs) {
    case ColorSpace::RGB: return rgb;
    case ColorSpace::HSV: return rgb_to_hsv(rgb);
    case ColorSpace::RGBHSV6: return six_channel(rgb);
    case ColorSpace::GRAY: return to_gray(rgb);
  }
  return rgb;
}

}  // namespace

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return int(std::max(1u, std::thread::hardware_concurrency()));
}

ImageTensor to_working_resolution(const ImageTensor& img, int long_side, int min_short_side) {
  if (long_side <= 0) return img;
  const bool wide = img.width() >= img.height();
  const double scale = double(long_side) / double(wide ? img.width() : img.height());
  const int short_native = wide ? img.height() : img.width();
  const int short_side = std::max(min_short_side, int(std::lround(short_native * scale)));
  return wide ? resize_bilinear(img, long_side, short_side) : resize_bilinear(img, short_side, long_side);
}

FeatureExtractor::FeatureExtractor(const ExtractOptions& opts)
    : opts_(opts),
      sc_gray_(load_solver(opts.sc_gray_dictionary, kScGray)),
      sc_rgb_(load_solver(opts.sc_rgb_dictionary, kScRgb)) {}

bool FeatureExtractor::can_compute(const std::string& feature) const {
  if (feature == kScGray) return sc_gray_ != nullptr;
  if (feature == kScRgb) return sc_rgb_ != nullptr;
  declared_dims(feature);
  return !is_external_feature(feature);
}

std::vector<double> FeatureExtractor::compute(const std::string& feature, const ImageTensor& rgb) const {
  detail::require(rgb.colorspace() == ColorSpace::RGB, "feature extraction expects an RGB image");
  if (feature == kScGray || feature == kScRgb) {
    const auto& solver = feature == kScGray ? sc_gray_ : sc_rgb_;
    if (!solver) throw ValidationError(feature + " needs a dictionary");
    const ImageTensor img = in_colorspace(rgb, solver->dictionary().colorspace());
    return sparse::encode_image(img, *solver, opts_.lambda).values;
  }
  if (!can_compute(feature)) throw ValidationError(feature + " must be ingested, it cannot be computed");
  const ImageTensor work = to_working_resolution(rgb, opts_.working_long_side, opts_.min_short_side);
  if (feature == features::kColorHist) return features::color_histogram_166(work).values;
  if (feature == features::kEdgeHist) return features::edge_histogram_64(work).values;
  return features::mslbp_236(work).values;
}

std::size_t extract_features(const std::vector<ManifestEntry>& entries, const ExtractRequest& req,
                             const FeatureExtractor& extractor, FeatureStore& store) {
  std::vector<std::string> computable;
  for (const auto& f : req.features) {
    if (extractor.can_compute(f)) computable.push_back(f);
    else if (!is_external_feature(f)) throw ValidationError(f + " needs a dictionary");
  }
  std::vector<std::size_t> counts(entries.size(), 0);
  detail::parallel_for(entries.size(), resolve_threads(req.threads), [&](std::size_t i) {
    const auto& e = entries[i];
    std::vector<Context> needed;
    for (Context c : req.contexts) {
      for (const auto& f : computable) {
        if (!context_allowed(f, c)) continue;
        if (req.overwrite || !store.contains(e.sample_id, c, f)) {
          needed.push_back(c);
          break;
        }
      }
    }
    if (needed.empty()) return;
    const auto images = build_contexts(e, needed);
    for (const auto& [c, img] : images) {
      for (const auto& f : computable) {
        if (!context_allowed(f, c)) continue;
        if (!req.overwrite && store.contains(e.sample_id, c, f)) continue;
        store.put({e.sample_id, c, f, extractor.compute(f, img)});
        ++counts[i];
      }
    }
  });
  std::size_t total = 0;
  for (auto n : counts) total += n;
  spdlog::info("computed {} feature records for {} samples", total, entries.size());
  return total;
}

}  // namespace dermo::pipeline
