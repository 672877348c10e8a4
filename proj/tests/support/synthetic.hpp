#pragma once

// A small on-disk dataset whose feature store already holds one perfectly
// informative component (WI:color_hist) and three pure-noise components.

#include <filesystem>
#include <string>

#include "dermo/feature_store.hpp"
#include "dermo/random.hpp"
#include "testutil.hpp"

namespace synthetic {

namespace fs = std::filesystem;

struct Dataset {
  fs::path manifest;
  fs::path store;
  fs::path config;
  int n_train = 0;
  int n_test = 0;
};

inline std::vector<double> noise_vector(dermo::Rng& rng, int dims) {
  std::vector<double> v(static_cast<std::size_t>(dims));
  for (double& x : v) x = rng.uniform();
  return v;
}

// Every dimension lies in [0.55, 1) for positives and [0, 0.45) for negatives.
inline std::vector<double> informative_vector(dermo::Rng& rng, int dims, int label) {
  std::vector<double> v(static_cast<std::size_t>(dims));
  for (double& x : v) x = label ? 0.55 + 0.45 * rng.uniform() : 0.45 * rng.uniform();
  return v;
}

inline std::string default_config(const std::string& selection) {
  return R"({
  "features": {"WI": ["color_hist", "edge_hist", "mslbp"], "CRGT": ["color_hist"]},
  "svm_c": 1.0,
  "fusion": "avg",
  "selection": ")" + selection + R"(",
  "folds": 3,
  "calibration_folds": 3,
  "seed": 11,
  "threads": 2
})";
}

// n samples alternating labels; the first two thirds are train, the rest test.
inline Dataset make(const fs::path& dir, int n = 60, std::uint64_t seed = 2024,
                    const std::string& selection = "greedy") {
  using namespace dermo;
  fs::create_directories(dir / "img");
  Rng rng(seed);
  Dataset d;
  d.manifest = dir / "manifest.csv";
  d.store = dir / "features.ndjson";
  d.config = dir / "config.json";

  std::string manifest = "sample_id,image_path,mask_path,pred_mask_path,label,split\n";
  pipeline::FeatureStore store;
  const int n_train = n * 2 / 3;
  for (int i = 0; i < n; ++i) {
    const std::string id = "s" + std::to_string(100 + i);
    const int label = i % 2;
    const bool train = i < n_train;
    (train ? d.n_train : d.n_test)++;
    write_image_png(dir / "img" / (id + ".png"), testutil::random_rgb8(rng, 8, 8));
    write_mask_png(dir / "img" / (id + "_gt.png"), testutil::square_mask(8, 8, 2, 2, 4));
    manifest += id + ",img/" + id + ".png,img/" + id + "_gt.png,," + std::to_string(label) + "," +
                (train ? "train" : "test") + "\n";
    store.put({id, pipeline::Context::WI, "color_hist", informative_vector(rng, 166, label)});
    store.put({id, pipeline::Context::WI, "edge_hist", noise_vector(rng, 64)});
    store.put({id, pipeline::Context::WI, "mslbp", noise_vector(rng, 236)});
    store.put({id, pipeline::Context::CRGT, "color_hist", noise_vector(rng, 166)});
  }
  testutil::write_file(d.manifest, manifest);
  store.save_as(d.store);
  testutil::write_file(d.config, default_config(selection));
  return d;
}

}  // namespace synthetic
