#include "dermo/nettopo.hpp"

#include <algorithm>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "dermo/errors.hpp"

namespace dermo::nettopo {

void UNetConfig::validate() const {
  detail::require(input_size > 0 && kernel_size > 0 && pool_size > 0, "sizes must be positive");
  detail::require(n_filters_stage1 > 0 && fc_dim > 0 && max_epochs > 0,
                  "filter count, fc_dim and max_epochs must be positive");
  for (double d : {dropout_a, dropout_b, dropout_c})
    detail::require(d >= 0.0 && d < 1.0, "dropout ratios must lie in [0, 1)");
  detail::require(noise_sigma >= 0.0 && learn_rate0 > 0.0 && momentum0 >= 0.0,
                  "noise, learn rate and momentum must be nonnegative");
  const long cube = long(pool_size) * pool_size * pool_size;
  detail::require(input_size % cube == 0, "input_size must be divisible by pool_size^3");
}

std::vector<UNetConfig> ensemble_configs() {
  auto row = [](int input, int k, int filters, int fc, double a, double b, double c) {
    UNetConfig cfg;
    cfg.input_size = input;
    cfg.kernel_size = k;
    cfg.n_filters_stage1 = filters;
    cfg.fc_dim = fc;
    cfg.dropout_a = a;
    cfg.dropout_b = b;
    cfg.dropout_c = c;
    return cfg;
  };
  return {
      row(128, 5, 32, 8192, 0.5, 0.5, 0.5),   row(128, 5, 32, 4096, 0.5, 0.5, 0.5),
      row(128, 5, 32, 2048, 0.5, 0.5, 0.5),   row(128, 5, 32, 1024, 0.5, 0.5, 0.5),
      row(128, 5, 32, 512, 0.5, 0.5, 0.5),    row(128, 5, 32, 256, 0.5, 0.5, 0.5),
      row(128, 3, 16, 1024, 0.5, 0.5, 0.5),   row(128, 5, 32, 8192, 0.5, 0.75, 0.5),
      row(128, 5, 32, 8192, 0.25, 0.5, 0.25), row(64, 5, 32, 8192, 0.5, 0.5, 0.5),
  };
}

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv: return "conv";
    case LayerKind::Pool: return "pool";
    case LayerKind::Dense: return "dense";
    case LayerKind::Unpool: return "unpool";
    case LayerKind::Deconv: return "deconv";
    case LayerKind::Output: return "output";
  }
  return "?";
}

std::int64_t conv_params(int kernel, int in_channels, int out_channels) {
  return std::int64_t(kernel) * kernel * in_channels * out_channels + out_channels;
}

std::int64_t dense_params(std::int64_t in, std::int64_t out) { return in * out + out; }

std::vector<LayerShape> infer_shapes(const UNetConfig& c) {
  c.validate();
  const int k = c.kernel_size;
  std::vector<LayerShape> layers;
  int side = c.input_size;
  int channels = kInputChannels;
  layers.push_back({"input", LayerKind::Input, 0, channels, 0, side, side, 0});

  std::vector<int> skip_channels;
  for (int s = 0; s < kStages; ++s) {
    const int out = c.n_filters_stage1 << s;
    for (int i = 1; i <= kConvsPerStage; ++i) {
      const std::string name = "conv" + std::to_string(s + 1) + "_" + std::to_string(i);
      layers.push_back({name, LayerKind::Conv, channels, out, k, side, side, conv_params(k, channels, out)});
      channels = out;
    }
    skip_channels.push_back(channels);
    side /= c.pool_size;
    layers.push_back({"pool" + std::to_string(s + 1), LayerKind::Pool, channels, channels, 0, side, side, 0});
  }

  const std::int64_t flat = std::int64_t(side) * side * channels;
  layers.push_back({"fc", LayerKind::Dense, int(flat), c.fc_dim, 0, 1, 1, dense_params(flat, c.fc_dim)});
  layers.push_back({"fc_expand", LayerKind::Dense, c.fc_dim, channels, 0, side, side,
                    dense_params(c.fc_dim, flat)});

  for (int s = kStages - 1; s >= 0; --s) {
    const int out = c.n_filters_stage1 << s;
    side *= c.pool_size;
    layers.push_back({"unpool" + std::to_string(s + 1), LayerKind::Unpool, channels, channels, 0, side, side, 0});
    for (int i = 1; i <= kConvsPerStage; ++i) {
      const bool first = i == 1;
      const int in = first ? channels + skip_channels[std::size_t(s)] : channels;
      const int kernel = first ? 2 * k + 1 : k;
      const std::string name = "deconv" + std::to_string(s + 1) + "_" + std::to_string(i);
      layers.push_back({name, LayerKind::Deconv, in, out, kernel, side, side, conv_params(kernel, in, out)});
      channels = out;
    }
  }
  layers.push_back({"output", LayerKind::Output, channels, kOutputChannels, k, side, side,
                    conv_params(k, channels, kOutputChannels)});
  return layers;
}

std::int64_t param_count(const UNetConfig& c) {
  std::int64_t total = 0;
  for (const auto& l : infer_shapes(c)) total += l.params;
  return total;
}

Schedule schedule(int epoch, const UNetConfig& c) {
  detail::require(epoch >= 1 && epoch <= c.max_epochs, "epoch must lie in [1, max_epochs]");
  const double t = c.max_epochs == 1 ? 0.0 : double(epoch - 1) / double(c.max_epochs - 1);
  return {c.learn_rate0 + (kFinalLearnRate - c.learn_rate0) * t,
          c.momentum0 + (kFinalMomentum - c.momentum0) * t};
}

MaskImage fuse_masks(std::span<const MaskImage> masks) {
  detail::require(!masks.empty(), "fuse_masks needs at least one mask");
  const int w = masks[0].width(), h = masks[0].height();
  for (const auto& m : masks)
    detail::require(m.width() == w && m.height() == h, "masks differ in dimensions");
  // mean >= 128  <=>  sum >= 128 * count, kept in integers.
  const std::uint64_t cutoff = std::uint64_t(kMaskThreshold) * masks.size();
  MaskImage out(w, h);
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    std::uint64_t sum = 0;
    for (const auto& m : masks) sum += m.values()[i];
    dst[i] = sum >= cutoff ? 255 : 0;
  }
  return out;
}

EarlyStop early_stop_check(std::span<const double> history, std::size_t patience) {
  detail::require(!history.empty(), "history is empty");
  EarlyStop r;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i] < history[r.best_epoch]) r.best_epoch = i;
  r.stop = history.size() - 1 - r.best_epoch >= patience;
  return r;
}

using nlohmann::json;

std::string config_to_json(const UNetConfig& c) {
  json j = {{"input_size", c.input_size},   {"kernel_size", c.kernel_size},
            {"pool_size", c.pool_size},     {"n_filters_stage1", c.n_filters_stage1},
            {"fc_dim", c.fc_dim},           {"dropout_a", c.dropout_a},
            {"dropout_b", c.dropout_b},     {"dropout_c", c.dropout_c},
            {"noise_sigma", c.noise_sigma}, {"learn_rate0", c.learn_rate0},
            {"momentum0", c.momentum0},     {"max_epochs", c.max_epochs}};
  return j.dump(2);
}

UNetConfig config_from_json(const std::string& text) {
  UNetConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ValidationError("network config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "input_size") c.input_size = value.get<int>();
      else if (key == "kernel_size") c.kernel_size = value.get<int>();
      else if (key == "pool_size") c.pool_size = value.get<int>();
      else if (key == "n_filters_stage1") c.n_filters_stage1 = value.get<int>();
      else if (key == "fc_dim") c.fc_dim = value.get<int>();
      else if (key == "dropout_a") c.dropout_a = value.get<double>();
      else if (key == "dropout_b") c.dropout_b = value.get<double>();
      else if (key == "dropout_c") c.dropout_c = value.get<double>();
      else if (key == "noise_sigma") c.noise_sigma = value.get<double>();
      else if (key == "learn_rate0") c.learn_rate0 = value.get<double>();
      else if (key == "momentum0") c.momentum0 = value.get<double>();
      else if (key == "max_epochs") c.max_epochs = value.get<int>();
      else throw ValidationError("unknown network config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("network config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw ValidationError(std::string("network config: ") + e.what());
  }
  return c;
}

std::string format_layer_table(const UNetConfig& c) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-7s %6s %6s %6s %11s %14s\n", "layer", "kind", "in", "out",
                "kernel", "spatial", "params");
  out += line;
  for (const auto& l : infer_shapes(c)) {
    const std::string spatial = std::to_string(l.height) + "x" + std::to_string(l.width);
    std::snprintf(line, sizeof line, "%-12s %-7s %6d %6d %6d %11s %14lld\n", l.name.c_str(),
                  to_string(l.kind).c_str(), l.in_channels, l.out_channels, l.kernel, spatial.c_str(),
                  static_cast<long long>(l.params));
    out += line;
  }
  std::snprintf(line, sizeof line, "total parameters: %lld\n", static_cast<long long>(param_count(c)));
  out += line;
  return out;
}

}  // namespace dermo::nettopo
