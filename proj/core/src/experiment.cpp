#include "dermo/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <spdlog/spdlog.h>
#include <sstream>

#include "dermo/errors.hpp"
#include "parallel.hpp"

namespace dermo::pipeline {
namespace fs = std::filesystem;
using ensemble::Component;
using ensemble::ScoreTable;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

augment::Range range_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("augmentation." + key + " must be [lo, hi]");
  augment::Range r{j[0].get<double>(), j[1].get<double>()};
  if (r.lo > r.hi) throw ValidationError("augmentation." + key + " has lo > hi");
  return r;
}

augment::AugmentRanges ranges_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("augmentation must be an object");
  augment::AugmentRanges r;
  const std::map<std::string, augment::Range*> ranges = {
      {"rotation", &r.rotation}, {"scale", &r.scale},     {"shift_x", &r.shift_x},
      {"shift_y", &r.shift_y},   {"crop_fraction", &r.crop_fraction},
      {"amp_x", &r.amp_x},       {"amp_y", &r.amp_y},     {"freq_x", &r.freq_x},
      {"freq_y", &r.freq_y},     {"phase_x", &r.phase_x}, {"phase_y", &r.phase_y}};
  for (const auto& [key, value] : j.items()) {
    if (auto it = ranges.find(key); it != ranges.end()) *it->second = range_from_json(value, key);
    else if (key == "flip_h_prob") r.flip_h_prob = value.get<double>();
    else if (key == "flip_v_prob") r.flip_v_prob = value.get<double>();
    else throw ValidationError("unknown augmentation key '" + key + "'");
  }
  return r;
}

json ranges_to_json(const augment::AugmentRanges& r) {
  auto pair = [](const augment::Range& x) { return json::array({x.lo, x.hi}); };
  return {{"rotation", pair(r.rotation)}, {"flip_h_prob", r.flip_h_prob}, {"flip_v_prob", r.flip_v_prob},
          {"scale", pair(r.scale)},       {"shift_x", pair(r.shift_x)},   {"shift_y", pair(r.shift_y)},
          {"crop_fraction", pair(r.crop_fraction)},
          {"amp_x", pair(r.amp_x)},       {"amp_y", pair(r.amp_y)},       {"freq_x", pair(r.freq_x)},
          {"freq_y", pair(r.freq_y)},     {"phase_x", pair(r.phase_x)},   {"phase_y", pair(r.phase_y)}};
}

json config_json(const ExperimentConfig& cfg) {
  json features = json::object();
  for (const auto& [ctx, names] : cfg.features) features[to_string(ctx)] = names;
  json c = {{"default", cfg.svm_c}};
  for (const auto& [key, value] : cfg.svm_c_overrides) c[key] = value;
  json dicts = json::object();
  if (cfg.extract.sc_gray_dictionary) dicts[kScGray] = cfg.extract.sc_gray_dictionary->string();
  if (cfg.extract.sc_rgb_dictionary) dicts[kScRgb] = cfg.extract.sc_rgb_dictionary->string();
  return {{"features", features},
          {"svm_c", c},
          {"fusion", ensemble::to_string(cfg.fusion)},
          {"selection", to_string(cfg.selection)},
          {"folds", cfg.folds},
          {"calibration_folds", cfg.calibration_folds},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"validation_fraction", cfg.validation_fraction},
          {"threshold", cfg.threshold},
          {"working_long_side", cfg.extract.working_long_side},
          {"min_short_side", cfg.extract.min_short_side},
          {"lambda", cfg.extract.lambda},
          {"dictionaries", dicts},
          {"augmentation", ranges_to_json(cfg.augmentation)}};
}

std::vector<int> to_signed(const std::vector<int>& labels) {
  std::vector<int> y(labels.size());
  std::transform(labels.begin(), labels.end(), y.begin(), [](int l) { return l ? 1 : -1; });
  return y;
}

std::string model_file_name(const Component& c) { return c.context + "_" + c.feature + ".json"; }

}  // namespace

std::string to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::None: return "none";
    case SelectionMode::Greedy: return "greedy";
    case SelectionMode::Forward: return "forward";
  }
  return "?";
}

SelectionMode selection_mode_from_string(const std::string& s) {
  if (s == "none") return SelectionMode::None;
  if (s == "greedy") return SelectionMode::Greedy;
  if (s == "forward") return SelectionMode::Forward;
  throw ValidationError("selection must be none, greedy or forward, got '" + s + "'");
}

std::vector<Component> ExperimentConfig::components() const {
  std::vector<Component> out;
  for (const auto& [ctx, names] : features)
    for (const auto& f : names) out.push_back({f, to_string(ctx)});
  return out;
}

double ExperimentConfig::c_for(const Component& c) const {
  const auto it = svm_c_overrides.find(c.key());
  return it == svm_c_overrides.end() ? svm_c : it->second;
}

void ExperimentConfig::validate() const {
  const auto comps = components();
  if (comps.empty()) throw ValidationError("config names no features");
  std::set<std::string> keys;
  for (const auto& c : comps) {
    if (!keys.insert(c.key()).second) throw ValidationError("component " + c.key() + " is listed twice");
    if (!context_allowed(c.feature, context_from_string(c.context))) {
      throw ValidationError(c.feature + " is only defined for the WI context");
    }
    if (c.feature == kScGray && !extract.sc_gray_dictionary) throw ValidationError("sc_gray needs dictionaries.sc_gray");
    if (c.feature == kScRgb && !extract.sc_rgb_dictionary) throw ValidationError("sc_rgb needs dictionaries.sc_rgb");
  }
  for (const auto& [key, value] : svm_c_overrides) {
    if (!keys.count(key)) throw ValidationError("svm_c override for unknown component " + key);
    if (!(value > 0)) throw ValidationError("svm_c for " + key + " must be positive");
  }
  if (!(svm_c > 0)) throw ValidationError("svm_c must be positive");
  if (folds < 1) throw ValidationError("folds must be at least 1");
  if (calibration_folds < 2) throw ValidationError("calibration_folds must be at least 2");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("validation_fraction must lie in [0, 1)");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in [0, 1]");
  if (!(extract.lambda > 0)) throw ValidationError("lambda must be positive");
  for (const auto& p : {extract.sc_gray_dictionary, extract.sc_rgb_dictionary})
    if (p && !fs::exists(*p)) throw ValidationError("dictionary does not exist: " + p->string());
}

ExperimentConfig config_from_json(const std::string& text, const fs::path& base_dir) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "features") {
        for (const auto& [ctx, names] : v.items()) {
          auto& list = cfg.features[context_from_string(ctx)];
          for (const auto& n : names) {
            const auto name = n.get<std::string>();
            declared_dims(name);
            list.push_back(name);
          }
        }
      } else if (key == "svm_c") {
        if (v.is_number()) {
          cfg.svm_c = v.get<double>();
        } else {
          for (const auto& [k, c] : v.items()) {
            if (k == "default") cfg.svm_c = c.get<double>();
            else cfg.svm_c_overrides[k] = c.get<double>();
          }
        }
      } else if (key == "fusion") {
        cfg.fusion = ensemble::fusion_mode_from_string(v.get<std::string>());
      } else if (key == "selection") {
        cfg.selection = selection_mode_from_string(v.get<std::string>());
      } else if (key == "folds") {
        cfg.folds = v.get<int>();
      } else if (key == "calibration_folds") {
        cfg.calibration_folds = v.get<int>();
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "threads") {
        cfg.threads = v.get<int>();
      } else if (key == "validation_fraction") {
        cfg.validation_fraction = v.get<double>();
      } else if (key == "threshold") {
        cfg.threshold = v.get<double>();
      } else if (key == "working_long_side") {
        cfg.extract.working_long_side = v.get<int>();
      } else if (key == "min_short_side") {
        cfg.extract.min_short_side = v.get<int>();
      } else if (key == "lambda") {
        cfg.extract.lambda = v.get<double>();
      } else if (key == "dictionaries") {
        for (const auto& [name, p] : v.items()) {
          fs::path path(p.get<std::string>());
          if (path.is_relative()) path = (base_dir / path).lexically_normal();
          if (name == kScGray) cfg.extract.sc_gray_dictionary = path;
          else if (name == kScRgb) cfg.extract.sc_rgb_dictionary = path;
          else throw ValidationError("unknown dictionary '" + name + "'");
        }
      } else if (key == "augmentation") {
        cfg.augmentation = ranges_from_json(v);
      } else {
        throw ValidationError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(read_text(path), path.parent_path());
}

LabelVault::LabelVault(const std::vector<ManifestEntry>& entries) {
  for (const auto& e : entries) entries_[e.sample_id] = {e.split, e.label};
}

std::vector<int> LabelVault::labels(const std::vector<std::string>& ids, Split split) const {
  if (split != Split::Train && phase_ != Phase::Evaluation) {
    throw ContractError(to_string(split) + " labels are sealed until evaluation");
  }
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = entries_.find(id);
    detail::require(it != entries_.end(), "unknown sample " + id);
    detail::require(it->second.first == split, id + " is not in the " + to_string(split) + " split");
    if (!it->second.second) throw ValidationError(id + " has no label");
    out.push_back(*it->second.second);
  }
  if (observer_) observer_({split, phase_, ids.size()});
  return out;
}

bool LabelVault::has_labels(const std::vector<std::string>& ids) const {
  for (const auto& id : ids) {
    const auto it = entries_.find(id);
    if (it == entries_.end() || !it->second.second) return false;
  }
  return true;
}

void LabelVault::open_evaluation() { phase_ = Phase::Evaluation; }

classify::Rows gather_rows(const FeatureStore& store, const std::vector<std::string>& ids, const Component& component) {
  const Context ctx = context_from_string(component.context);
  classify::Rows rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    auto v = store.get(id, ctx, component.feature);
    if (!v) throw ValidationError("missing feature record " + id + " " + component.key());
    if (!rows.empty() && v->size() != rows.front().size()) {
      throw ValidationError(component.key() + " vectors differ in length at " + id);
    }
    rows.push_back(std::move(*v));
  }
  return rows;
}

TrainedComponents train_components(const std::vector<Component>& components,
                                   const std::function<double(const Component&)>& c_for,
                                   const std::vector<std::string>& ids, const std::vector<int>& labels,
                                   const FeatureStore& store, const TrainOptions& opts) {
  detail::require(ids.size() == labels.size(), "ids and labels differ in count");
  const auto y = to_signed(labels);
  std::vector<classify::Rows> rows(components.size());
  for (std::size_t c = 0; c < components.size(); ++c) rows[c] = gather_rows(store, ids, components[c]);

  TrainedComponents out;
  out.models.resize(components.size());
  std::vector<std::vector<double>> oof(components.size());
  detail::parallel_for(components.size(), resolve_threads(opts.threads), [&](std::size_t c) {
    classify::SvmOptions svm;
    svm.C = c_for(components[c]);
    auto fit = classify::fit_classifier(rows[c], y, svm, opts.calibration_folds, opts.seed);
    fit.model.feature = components[c].feature;
    fit.model.context = components[c].context;
    out.models[c] = std::move(fit.model);
    oof[c] = std::move(fit.oof_probabilities);
    spdlog::debug("trained {}", components[c].key());
  });

  out.oof.sample_ids = ids;
  out.oof.components = components;
  out.oof.labels = labels;
  out.oof.scores.assign(ids.size(), std::vector<double>(components.size()));
  for (std::size_t c = 0; c < components.size(); ++c)
    for (std::size_t i = 0; i < ids.size(); ++i) out.oof.scores[i][c] = oof[c][i];
  return out;
}

ScoreTable predict_components(const std::vector<classify::CalibratedClassifier>& models,
                              const std::vector<std::string>& ids, const FeatureStore& store, int threads) {
  ScoreTable t;
  t.sample_ids = ids;
  for (const auto& m : models) t.components.push_back({m.feature, m.context});
  t.scores.assign(ids.size(), std::vector<double>(models.size()));
  std::vector<classify::Rows> rows(models.size());
  for (std::size_t c = 0; c < models.size(); ++c) rows[c] = gather_rows(store, ids, t.components[c]);
  detail::parallel_for(models.size(), resolve_threads(threads), [&](std::size_t c) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (rows[c][i].size() != models[c].normalizer.dims()) {
        throw ValidationError(t.components[c].key() + " feature length does not match the model at " + ids[i]);
      }
      t.scores[i][c] = models[c].predict_proba(rows[c][i]);
    }
  });
  return t;
}

void save_models(const fs::path& dir, const std::vector<classify::CalibratedClassifier>& models) {
  fs::create_directories(dir);
  for (const auto& m : models) classify::save_model(dir / model_file_name({m.feature, m.context}), m);
}

std::vector<classify::CalibratedClassifier> load_models(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("model directory does not exist: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no models in " + dir.string());
  std::vector<classify::CalibratedClassifier> models;
  for (const auto& f : files) models.push_back(classify::load_model(f));
  return models;
}

std::string fused_to_csv(const ScoreTable& table, const std::vector<double>& fused) {
  detail::require(fused.size() == table.n_samples(), "fused scores do not match the table");
  std::string out = "sample_id,label,score\n";
  char buf[32];
  for (std::size_t i = 0; i < fused.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", fused[i]);
    out += table.sample_ids[i] + "," + (table.labels ? std::to_string((*table.labels)[i]) : "") + "," + buf + "\n";
  }
  return out;
}

ScoreTable fused_from_csv(const std::string& text) {
  constexpr std::string_view kHeader = "sample_id,label,score";
  if (text.compare(0, kHeader.size(), kHeader) != 0) throw ParseError(1, "fused CSV header must be sample_id,label,score");
  return ensemble::score_table_from_csv("sample_id,label,fused:score" + text.substr(kHeader.size()));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::vector<ManifestEntry> entries,
                                FeatureStore& store, const ExperimentHooks& hooks) {
  auto stage = [&](const char* name) {
    spdlog::info("stage: {}", name);
    if (hooks.on_stage) hooks.on_stage(name);
  };

  stage("validate");
  cfg.validate();
  assign_validation_split(entries, cfg.validation_fraction, cfg.seed);
  const auto components = cfg.components();
  std::vector<Context> contexts;
  for (const auto& [ctx, names] : cfg.features)
    if (!names.empty()) contexts.push_back(ctx);

  std::map<Split, std::vector<std::string>> ids;
  for (const auto& e : entries) {
    ids[e.split].push_back(e.sample_id);
    for (Context c : contexts) {
      if (c == Context::CR && !e.pred_mask_path) throw ValidationError(e.sample_id + ": CR context needs pred_mask_path");
      if (c == Context::CRGT && !e.mask_path) throw ValidationError(e.sample_id + ": CRGT context needs mask_path");
    }
  }
  for (const auto& comp : components) {
    if (!is_external_feature(comp.feature)) continue;
    for (const auto& e : entries) {
      if (!store.contains(e.sample_id, context_from_string(comp.context), comp.feature)) {
        throw ValidationError("missing external feature " + comp.key() + " for " + e.sample_id);
      }
    }
  }
  LabelVault vault(entries);
  if (hooks.on_label_read) vault.set_observer(hooks.on_label_read);
  const auto& train_ids = ids[Split::Train];
  if (train_ids.empty()) throw ValidationError("manifest has no train entries");
  const auto train_labels = vault.labels(train_ids, Split::Train);
  const long n_pos = std::count(train_labels.begin(), train_labels.end(), 1);
  const long n_neg = long(train_labels.size()) - n_pos;
  const int need = std::max(cfg.calibration_folds, cfg.selection == SelectionMode::None ? 1 : cfg.folds);
  if (n_pos < need || n_neg < need) {
    throw ValidationError("train split needs at least " + std::to_string(need) + " samples of each class, has " +
                          std::to_string(n_pos) + " positive and " + std::to_string(n_neg) + " negative");
  }

  stage("extract");
  {
    const FeatureExtractor extractor(cfg.extract);
    std::map<Context, std::vector<std::string>> per_context = cfg.features;
    for (const auto& [ctx, names] : per_context) {
      ExtractRequest req{{ctx}, names, false, cfg.threads};
      extract_features(entries, req, extractor, store);
    }
  }

  stage("train");
  TrainOptions topts{cfg.calibration_folds, cfg.seed, cfg.threads};
  auto trained = train_components(components, [&](const Component& c) { return cfg.c_for(c); }, train_ids,
                                  train_labels, store, topts);

  stage("select");
  ExperimentResult result;
  result.components = components;
  result.models = std::move(trained.models);
  ensemble::SelectionOptions sopts{cfg.folds, cfg.seed, resolve_threads(cfg.threads)};
  switch (cfg.selection) {
    case SelectionMode::None:
      for (std::size_t c = 0; c < components.size(); ++c) result.subset.push_back(c);
      break;
    case SelectionMode::Greedy:
      result.greedy = ensemble::greedy_selection(trained.oof, sopts);
      result.subset = result.greedy->subset;
      break;
    case SelectionMode::Forward:
      result.forward = ensemble::forward_selection(trained.oof, sopts);
      result.subset = result.forward->subset;
      break;
  }
  {
    SplitResult train_cv;
    train_cv.name = "train_cv";
    train_cv.fused = ensemble::fuse(trained.oof, result.subset, cfg.fusion);
    train_cv.table = std::move(trained.oof);
    result.splits.push_back(std::move(train_cv));
  }

  stage("predict");
  for (Split s : {Split::Validation, Split::Test}) {
    if (ids[s].empty()) continue;
    SplitResult r;
    r.name = to_string(s);
    r.table = predict_components(result.models, ids[s], store, cfg.threads);
    r.fused = ensemble::fuse(r.table, result.subset, cfg.fusion);
    result.splits.push_back(std::move(r));
  }

  stage("evaluate");
  vault.open_evaluation();
  for (auto& r : result.splits) {
    if (r.name != "train_cv") {
      const Split s = split_from_string(r.name);
      if (!vault.has_labels(ids[s])) {
        spdlog::warn("{} split is unlabeled, skipping metrics", r.name);
        continue;
      }
      r.table.labels = vault.labels(ids[s], s);
    }
    const auto& l = *r.table.labels;
    const bool both = std::count(l.begin(), l.end(), 1) > 0 && std::count(l.begin(), l.end(), 0) > 0;
    if (!both) {
      spdlog::warn("{} split lacks one of the classes, skipping metrics", r.name);
      continue;
    }
    r.report = metrics::evaluate_classification(r.fused, l, cfg.threshold);
    r.roc = metrics::roc_curve(r.fused, l);
  }
  result.entries = std::move(entries);
  return result;
}

void write_bundle(const ExperimentResult& result, const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  json report;
  report["format"] = "dermo-experiment/1";
  report["config"] = config_json(cfg);
  json comps = json::array(), selected = json::array();
  for (const auto& c : result.components) comps.push_back(c.key());
  for (std::size_t idx : result.subset) selected.push_back(result.components[idx].key());
  report["components"] = comps;
  report["selected"] = selected;
  json splits = json::object();
  for (const auto& r : result.splits) {
    json s = {{"n", r.table.n_samples()}};
    s["metrics"] = r.report ? json::parse(metrics::report_to_json(*r.report)) : json(nullptr);
    splits[r.name] = s;
    write_text(out_dir / ("scores_" + r.name + ".csv"), ensemble::score_table_to_csv(r.table));
    write_text(out_dir / ("fused_" + r.name + ".csv"), fused_to_csv(r.table, r.fused));
    if (r.roc) write_text(out_dir / ("roc_" + r.name + ".csv"), metrics::roc_to_csv(*r.roc));
  }
  report["splits"] = splits;
  write_text(out_dir / "report.json", report.dump(2) + "\n");

  std::string split_csv = "sample_id,split\n";
  for (const auto& e : result.entries) split_csv += e.sample_id + "," + to_string(e.split) + "\n";
  write_text(out_dir / "splits.csv", split_csv);

  if (result.greedy) write_text(out_dir / "selection_trace.csv", ensemble::greedy_trace_csv(*result.greedy));
  if (result.forward) write_text(out_dir / "selection_trace.csv", ensemble::forward_trace_csv(*result.forward));
  save_models(out_dir / "models", result.models);
}

}  // namespace dermo::pipeline
