// dermo: command-line front end for feature extraction, training, fusion,
// evaluation and the segmentation helpers.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <sstream>

#include "dermo/augment.hpp"
#include "dermo/ensemble.hpp"
#include "dermo/errors.hpp"
#include "dermo/experiment.hpp"
#include "dermo/extract.hpp"
#include "dermo/feature_store.hpp"
#include "dermo/manifest.hpp"
#include "dermo/metrics.hpp"
#include "dermo/nettopo.hpp"
#include "dermo/sparse.hpp"

namespace fs = std::filesystem;
using namespace dermo;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 0;
  int folds = 3;
  std::string store;
  std::string manifest;
  std::string config;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--folds", c.folds, "Cross-validation folds")->check(CLI::PositiveNumber);
  cmd->add_option("--store", c.store, "Feature store (NDJSON)");
  cmd->add_option("--manifest", c.manifest, "Dataset manifest CSV");
  cmd->add_option("--config", c.config, "Experiment config JSON");
  cmd->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

void need(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string(flag) + " is required");
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::vector<std::size_t> subset_for(const ensemble::ScoreTable& t, const std::vector<std::string>& keys) {
  std::vector<std::size_t> subset;
  if (keys.empty()) {
    for (std::size_t c = 0; c < t.n_components(); ++c) subset.push_back(c);
    return subset;
  }
  for (const auto& k : keys) {
    std::size_t c = 0;
    while (c < t.n_components() && t.components[c].key() != k) ++c;
    if (c == t.n_components()) throw ValidationError("score table has no component " + k);
    subset.push_back(c);
  }
  return subset;
}

std::vector<pipeline::ManifestEntry> entries_in(const std::vector<pipeline::ManifestEntry>& all,
                                                pipeline::Split split) {
  std::vector<pipeline::ManifestEntry> out;
  for (const auto& e : all)
    if (e.split == split) out.push_back(e);
  return out;
}

std::vector<std::string> ids_of(const std::vector<pipeline::ManifestEntry>& entries) {
  std::vector<std::string> ids;
  for (const auto& e : entries) ids.push_back(e.sample_id);
  return ids;
}

// --- extract ----------------------------------------------------------------

struct ExtractArgs {
  std::vector<std::string> features{"color_hist,edge_hist,mslbp"};
  std::vector<std::string> contexts{"WI"};
  std::string sc_gray, sc_rgb, ingest;
  int working_size = 256;
  bool overwrite = false;
};

int cmd_extract(const Common& c, const ExtractArgs& a) {
  need(c.store, "--store");
  pipeline::FeatureStore store{fs::path(c.store)};
  if (!a.ingest.empty()) {
    const auto records = pipeline::ingest_external_features(a.ingest);
    for (auto r : records) store.put(std::move(r));
    spdlog::info("ingested {} external records", records.size());
  }
  if (!c.manifest.empty()) {
    const auto entries = pipeline::load_manifest(c.manifest);
    pipeline::ExtractOptions opts;
    pipeline::ExtractRequest req;
    req.threads = c.threads;
    req.overwrite = a.overwrite;
    if (!c.config.empty()) {
      const auto cfg = pipeline::load_config(c.config);
      opts = cfg.extract;
      for (const auto& [ctx, names] : cfg.features) {
        pipeline::ExtractRequest r = req;
        r.contexts = {ctx};
        r.features = names;
        pipeline::extract_features(entries, r, pipeline::FeatureExtractor(opts), store);
      }
    } else {
      opts.working_long_side = a.working_size;
      if (!a.sc_gray.empty()) opts.sc_gray_dictionary = a.sc_gray;
      if (!a.sc_rgb.empty()) opts.sc_rgb_dictionary = a.sc_rgb;
      for (const auto& ctx : split_list(a.contexts)) req.contexts.push_back(pipeline::context_from_string(ctx));
      req.features = split_list(a.features);
      pipeline::extract_features(entries, req, pipeline::FeatureExtractor(opts), store);
    }
  }
  store.save();
  std::cout << store.size() << " records in " << c.store << "\n";
  return 0;
}

// --- train / predict ---------------------------------------------------------

struct TrainArgs {
  std::string out = "models";
  std::string oof;
};

int cmd_train(const Common& c, const TrainArgs& a) {
  need(c.store, "--store");
  need(c.manifest, "--manifest");
  need(c.config, "--config");
  const auto cfg = pipeline::load_config(c.config);
  const auto entries = pipeline::load_manifest(c.manifest);
  const pipeline::FeatureStore store{fs::path(c.store)};
  const auto train = entries_in(entries, pipeline::Split::Train);
  if (train.empty()) throw ValidationError("manifest has no train entries");
  const pipeline::LabelVault vault(entries);
  const auto ids = ids_of(train);
  const auto labels = vault.labels(ids, pipeline::Split::Train);
  pipeline::TrainOptions opts{c.folds, c.seed, c.threads};
  const auto trained = pipeline::train_components(
      cfg.components(), [&](const ensemble::Component& comp) { return cfg.c_for(comp); }, ids, labels, store, opts);
  pipeline::save_models(a.out, trained.models);
  if (!a.oof.empty()) emit(a.oof, ensemble::score_table_to_csv(trained.oof));
  std::cout << trained.models.size() << " models written to " << a.out << "\n";
  return 0;
}

struct PredictArgs {
  std::string models = "models";
  std::string split = "test";
  std::string out;
};

int cmd_predict(const Common& c, const PredictArgs& a) {
  need(c.store, "--store");
  need(c.manifest, "--manifest");
  const auto entries = pipeline::load_manifest(c.manifest);
  const pipeline::FeatureStore store{fs::path(c.store)};
  const auto models = pipeline::load_models(a.models);
  const auto chosen = entries_in(entries, pipeline::split_from_string(a.split));
  auto table = pipeline::predict_components(models, ids_of(chosen), store, c.threads);
  bool labeled = !chosen.empty();
  for (const auto& e : chosen) labeled = labeled && e.label.has_value();
  if (labeled) {
    std::vector<int> labels;
    for (const auto& e : chosen) labels.push_back(*e.label);
    table.labels = labels;
  }
  emit(a.out, ensemble::score_table_to_csv(table));
  return 0;
}

// --- evaluation -------------------------------------------------------------

struct EvalClsArgs {
  std::string scores;
  std::string fusion = "avg";
  std::vector<std::string> components;
  double threshold = 0.5;
  std::string out;
  std::string roc;
};

int cmd_evaluate_cls(const EvalClsArgs& a) {
  const std::string text = read_text(a.scores);
  std::vector<double> scores;
  std::vector<int> labels;
  if (text.rfind("sample_id,label,score\n", 0) == 0) {
    const auto t = pipeline::fused_from_csv(text);
    if (!t.labels) throw ValidationError("scores have no labels");
    scores = t.column(0);
    labels = *t.labels;
  } else {
    const auto t = ensemble::score_table_from_csv(text);
    if (!t.labels) throw ValidationError("scores have no labels");
    scores = ensemble::fuse(t, subset_for(t, split_list(a.components)), ensemble::fusion_mode_from_string(a.fusion));
    labels = *t.labels;
  }
  const auto report = metrics::evaluate_classification(scores, labels, a.threshold);
  emit(a.out, metrics::report_to_json(report) + "\n");
  if (!a.roc.empty()) emit(a.roc, metrics::roc_to_csv(metrics::roc_curve(scores, labels)));
  return 0;
}

struct EvalSegArgs {
  std::string pred, gt, out;
};

MaskImage binarize(MaskImage m) {
  for (auto& v : m.values()) v = v >= kMaskThreshold ? 255 : 0;
  return m;
}

json seg_json(const metrics::SegReport& r) { return json::parse(metrics::seg_report_to_json(r)); }

int cmd_evaluate_seg(const Common& c, const EvalSegArgs& a) {
  std::vector<std::pair<std::string, metrics::SegReport>> rows;
  if (!a.pred.empty() || !a.gt.empty()) {
    need(a.pred, "--pred");
    need(a.gt, "--gt");
    rows.emplace_back(fs::path(a.pred).stem().string(),
                      metrics::seg_metrics(binarize(read_mask(a.pred)), binarize(read_mask(a.gt))));
  } else {
    need(c.manifest, "--manifest (or --pred and --gt)");
    for (const auto& e : pipeline::load_manifest(c.manifest)) {
      if (!e.pred_mask_path || !e.mask_path) continue;
      rows.emplace_back(e.sample_id, metrics::seg_metrics(binarize(read_mask(*e.pred_mask_path)),
                                                          binarize(read_mask(*e.mask_path))));
    }
    if (rows.empty()) throw ValidationError("no manifest entry has both mask_path and pred_mask_path");
  }
  json samples = json::array();
  double jac = 0, acc = 0, sens = 0, spec = 0;
  for (const auto& [id, r] : rows) {
    json s = seg_json(r);
    s["sample_id"] = id;
    samples.push_back(s);
    jac += r.jaccard, acc += r.acc, sens += r.sens, spec += r.spec;
  }
  const double n = double(rows.size());
  const json out = {{"mean", {{"jaccard", jac / n}, {"acc", acc / n}, {"sens", sens / n}, {"spec", spec / n}}},
                    {"samples", samples}};
  emit(a.out, out.dump(2) + "\n");
  return 0;
}

// --- selection and fusion ---------------------------------------------------

struct SelectArgs {
  std::string scores;
  std::string method = "greedy";
  std::string trace;
};

int cmd_select(const Common& c, const SelectArgs& a) {
  const auto t = ensemble::score_table_from_csv(read_text(a.scores));
  ensemble::SelectionOptions opts{c.folds, c.seed, pipeline::resolve_threads(c.threads)};
  std::vector<std::size_t> subset;
  double ap = 0;
  std::string trace;
  if (a.method == "greedy") {
    const auto r = ensemble::greedy_selection(t, opts);
    subset = r.subset, ap = r.ap, trace = ensemble::greedy_trace_csv(r);
  } else if (a.method == "forward") {
    const auto r = ensemble::forward_selection(t, opts);
    subset = r.subset, ap = r.ap, trace = ensemble::forward_trace_csv(r);
  } else {
    throw ValidationError("--method must be greedy or forward");
  }
  if (!a.trace.empty()) emit(a.trace, trace);
  std::string keys;
  for (std::size_t idx : subset) keys += (keys.empty() ? "" : ",") + t.components[idx].key();
  std::cout << "selected " << keys << "\ncv_ap " << ap << "\n";
  return 0;
}

struct FuseArgs {
  std::string scores;
  std::string mode = "avg";
  std::vector<std::string> components;
  std::string out;
};

int cmd_fuse(const FuseArgs& a) {
  const auto t = ensemble::score_table_from_csv(read_text(a.scores));
  const auto fused = ensemble::fuse(t, subset_for(t, split_list(a.components)), ensemble::fusion_mode_from_string(a.mode));
  emit(a.out, pipeline::fused_to_csv(t, fused));
  return 0;
}

// --- segmentation helpers ---------------------------------------------------

struct SegFuseArgs {
  std::string masks, out;
};

int cmd_segment_fuse(const SegFuseArgs& a) {
  const auto n = pipeline::segment_fuse_dir(a.masks, a.out);
  std::cout << n << " fused masks written to " << a.out << "\n";
  return 0;
}

struct NetInfoArgs {
  int row = 0;
  nettopo::UNetConfig cfg;
  bool json_out = false;
};

int cmd_net_info(const Common& c, NetInfoArgs a) {
  if (!c.config.empty()) a.cfg = nettopo::config_from_json(read_text(c.config));
  if (a.row != 0) {
    const auto rows = nettopo::ensemble_configs();
    if (a.row < 1 || a.row > int(rows.size())) throw ValidationError("--row must be 1.." + std::to_string(rows.size()));
    a.cfg = rows[std::size_t(a.row - 1)];
  }
  try {
    a.cfg.validate();
  } catch (const ContractError& e) {
    throw ValidationError(e.what());
  }
  const auto total = nettopo::param_count(a.cfg);
  if (a.json_out) {
    json layers = json::array();
    for (const auto& l : nettopo::infer_shapes(a.cfg)) {
      layers.push_back({{"name", l.name}, {"kind", nettopo::to_string(l.kind)}, {"in", l.in_channels},
                        {"out", l.out_channels}, {"kernel", l.kernel}, {"height", l.height},
                        {"width", l.width}, {"params", l.params}});
    }
    std::cout << json{{"config", json::parse(nettopo::config_to_json(a.cfg))}, {"layers", layers},
                      {"total_params", total}}.dump(2)
              << "\n";
    return 0;
  }
  std::cout << nettopo::format_layer_table(a.cfg);
  std::cout << "reference total:  " << nettopo::kReferenceParamCount << " (difference "
            << total - nettopo::kReferenceParamCount << ")\n";
  return 0;
}

struct AugmentArgs {
  std::string image, mask, out = "augment_preview";
  int count = 4;
};

int cmd_augment_preview(const Common& c, const AugmentArgs& a) {
  need(a.image, "--image");
  const ImageTensor img = read_image(a.image);
  std::optional<MaskImage> mask;
  if (!a.mask.empty()) mask = read_mask(a.mask);
  auto ranges = augment::AugmentRanges::defaults_for(img.width(), img.height());
  if (!c.config.empty()) ranges = pipeline::load_config(c.config).augmentation;
  fs::create_directories(a.out);
  for (int k = 0; k < a.count; ++k) {
    const auto p = augment::sample_params(c.seed + std::uint64_t(k), ranges);
    const auto res = augment::apply(img, mask, p);
    const std::string stem = "aug_" + std::to_string(k);
    write_image_png(fs::path(a.out) / (stem + ".png"), res.image);
    if (res.mask) write_mask_png(fs::path(a.out) / (stem + "_mask.png"), *res.mask);
    std::printf("%s rot=%.2f flip=%d%d scale=%.3f shift=(%.2f,%.2f) crop=%.3f warp_amp=(%.2f,%.2f)\n",
                stem.c_str(), p.rotation, p.flip_h, p.flip_v, p.scale, p.shift_x, p.shift_y, p.crop_fraction,
                p.warp.amp_x, p.warp.amp_y);
  }
  return 0;
}

// --- run / learn-dict ----------------------------------------------------------

struct RunArgs {
  std::string out = "run";
};

int cmd_run(const Common& c, const RunArgs& a) {
  need(c.config, "--config");
  need(c.manifest, "--manifest");
  auto cfg = pipeline::load_config(c.config);
  if (c.threads > 0) cfg.threads = c.threads;
  pipeline::FeatureStore store = c.store.empty() ? pipeline::FeatureStore() : pipeline::FeatureStore(fs::path(c.store));
  const auto result = pipeline::run_experiment(cfg, pipeline::load_manifest(c.manifest), store);
  if (store.path()) store.save();
  pipeline::write_bundle(result, cfg, a.out);
  for (const auto& r : result.splits) {
    if (!r.report) continue;
    std::printf("%-10s AP %.4f  AUC %.4f  ACC %.4f  SENS %.4f  SPEC %.4f  SP95 %.4f\n", r.name.c_str(),
                r.report->ap, r.report->auc, r.report->acc, r.report->sens, r.report->spec, r.report->sp95);
  }
  return 0;
}

struct LearnArgs {
  std::string out = "dictionary.bin";
  std::string colorspace = "GRAY";
  sparse::LearnOptions opts;
};

int cmd_learn_dict(const Common& c, LearnArgs a) {
  need(c.manifest, "--manifest");
  const ColorSpace cs = colorspace_from_string(a.colorspace);
  std::vector<std::vector<double>> patches;
  for (const auto& e : pipeline::load_manifest(c.manifest)) {
    if (e.split != pipeline::Split::Train) continue;
    ImageTensor img = resize_bilinear(read_image(e.image_path), sparse::kEncodeSize, sparse::kEncodeSize);
    if (cs == ColorSpace::GRAY) img = to_gray(img);
    else if (cs == ColorSpace::HSV) img = rgb_to_hsv(img);
    else if (cs == ColorSpace::RGBHSV6) img = six_channel(img);
    for (auto& p : sparse::extract_patches(img, sparse::kPatchSide, sparse::kPatchSide)) patches.push_back(std::move(p));
  }
  if (patches.empty()) throw ValidationError("no train images to learn from");
  a.opts.seed = c.seed;
  const auto dict = sparse::learn_dictionary(patches, cs, sparse::kPatchSide, a.opts);
  sparse::save_dictionary(a.out, dict);
  std::cout << dict.n_atoms() << " atoms of dim " << dict.atom_dim() << " written to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("dermo");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Dermoscopy lesion classification and segmentation toolkit"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only log errors");

  Common common;
  std::function<int()> action;

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Compute features into the store, or ingest external ones");
  add_common(extract, common);
  extract->add_option("--features", ex.features, "Comma-separated feature names");
  extract->add_option("--contexts", ex.contexts, "Comma-separated contexts (WI, CR, CRGT)");
  extract->add_option("--sc-gray-dict", ex.sc_gray, "Grayscale dictionary for sc_gray");
  extract->add_option("--sc-rgb-dict", ex.sc_rgb, "Color dictionary for sc_rgb");
  extract->add_option("--working-size", ex.working_size, "Long side for hand-coded features, 0 = native");
  extract->add_option("--ingest", ex.ingest, "NDJSON file of external feature records");
  extract->add_flag("--overwrite", ex.overwrite, "Recompute existing records");
  extract->callback([&] { action = [&] { return cmd_extract(common, ex); }; });

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one calibrated SVM per component on the train split");
  add_common(train, common);
  train->add_option("--out", tr.out, "Model directory");
  train->add_option("--oof", tr.oof, "Write out-of-fold training scores here");
  train->callback([&] { action = [&] { return cmd_train(common, tr); }; });

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Score a manifest split with trained models");
  add_common(predict, common);
  predict->add_option("--models", pr.models, "Model directory");
  predict->add_option("--split", pr.split, "train, validation or test");
  predict->add_option("--out", pr.out, "Score table CSV (default stdout)");
  predict->callback([&] { action = [&] { return cmd_predict(common, pr); }; });

  EvalClsArgs ec;
  auto* eval_cls = app.add_subcommand("evaluate-cls", "Classification metrics for a score CSV");
  add_common(eval_cls, common);
  eval_cls->add_option("--scores", ec.scores, "Score table or fused CSV")->required();
  eval_cls->add_option("--fusion", ec.fusion, "avg or vote, for multi-component tables");
  eval_cls->add_option("--components", ec.components, "Comma-separated component keys to fuse");
  eval_cls->add_option("--threshold", ec.threshold, "Decision threshold");
  eval_cls->add_option("--out", ec.out, "Report JSON (default stdout)");
  eval_cls->add_option("--roc", ec.roc, "ROC CSV output");
  eval_cls->callback([&] { action = [&] { return cmd_evaluate_cls(ec); }; });

  EvalSegArgs es;
  auto* eval_seg = app.add_subcommand("evaluate-seg", "Segmentation metrics (masks binarized at 128)");
  add_common(eval_seg, common);
  eval_seg->add_option("--pred", es.pred, "Predicted mask");
  eval_seg->add_option("--gt", es.gt, "Ground-truth mask");
  eval_seg->add_option("--out", es.out, "Report JSON (default stdout)");
  eval_seg->callback([&] { action = [&] { return cmd_evaluate_seg(common, es); }; });

  SelectArgs se;
  auto* select = app.add_subcommand("select", "Greedy or forward component selection");
  add_common(select, common);
  select->add_option("--scores", se.scores, "Labeled score table CSV")->required();
  select->add_option("--method", se.method, "greedy or forward");
  select->add_option("--trace", se.trace, "Selection trace CSV output");
  select->callback([&] { action = [&] { return cmd_select(common, se); }; });

  FuseArgs fu;
  auto* fuse = app.add_subcommand("fuse", "Average or vote fusion of a score table");
  add_common(fuse, common);
  fuse->add_option("--scores", fu.scores, "Score table CSV")->required();
  fuse->add_option("--mode", fu.mode, "avg or vote");
  fuse->add_option("--components", fu.components, "Comma-separated component keys (default all)");
  fuse->add_option("--out", fu.out, "Fused CSV (default stdout)");
  fuse->callback([&] { action = [&] { return cmd_fuse(fu); }; });

  SegFuseArgs sf;
  auto* seg_fuse = app.add_subcommand("segment-fuse", "Average confidence masks per sample and threshold at 128");
  add_common(seg_fuse, common);
  seg_fuse->add_option("--masks", sf.masks, "Directory of per-sample groups")->required();
  seg_fuse->add_option("--out", sf.out, "Output directory")->required();
  seg_fuse->callback([&] { action = [&] { return cmd_segment_fuse(sf); }; });

  NetInfoArgs ni;
  auto* net_info = app.add_subcommand("net-info", "Layer shapes and parameter count of a U-Net configuration");
  add_common(net_info, common);
  net_info->add_option("--row", ni.row, "Use ensemble member 1..10");
  net_info->add_option("--input-size", ni.cfg.input_size);
  net_info->add_option("--kernel-size", ni.cfg.kernel_size);
  net_info->add_option("--pool-size", ni.cfg.pool_size);
  net_info->add_option("--filters", ni.cfg.n_filters_stage1, "Filters in the first stage");
  net_info->add_option("--fc-dim", ni.cfg.fc_dim);
  net_info->add_flag("--json", ni.json_out, "Print JSON instead of a table");
  net_info->callback([&] { action = [&] { return cmd_net_info(common, ni); }; });

  AugmentArgs au;
  auto* aug = app.add_subcommand("augment-preview", "Write seeded augmentations of one image");
  add_common(aug, common);
  aug->add_option("--image", au.image, "Input image (PNG or PPM)")->required();
  aug->add_option("--mask", au.mask, "Optional mask");
  aug->add_option("--count", au.count, "Number of samples")->check(CLI::PositiveNumber);
  aug->add_option("--out", au.out, "Output directory");
  aug->callback([&] { action = [&] { return cmd_augment_preview(common, au); }; });

  RunArgs ru;
  auto* run = app.add_subcommand("run", "Full experiment: extract, train, select, fuse, evaluate");
  add_common(run, common);
  run->add_option("--out", ru.out, "Output bundle directory");
  run->callback([&] { action = [&] { return cmd_run(common, ru); }; });

  LearnArgs ld;
  auto* learn = app.add_subcommand("learn-dict", "Learn a sparse-coding dictionary from train images");
  add_common(learn, common);
  learn->add_option("--out", ld.out, "Dictionary file");
  learn->add_option("--colorspace", ld.colorspace, "GRAY, RGB, HSV or RGBHSV6");
  learn->add_option("--atoms", ld.opts.n_atoms)->check(CLI::PositiveNumber);
  learn->add_option("--iterations", ld.opts.iterations)->check(CLI::PositiveNumber);
  learn->add_option("--batch", ld.opts.batch_size)->check(CLI::PositiveNumber);
  learn->add_option("--lambda", ld.opts.lambda);
  learn->callback([&] { action = [&] { return cmd_learn_dict(common, ld); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    return action();
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const ContractError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
