#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dermo/imaging.hpp"

namespace dermo::nettopo {

struct UNetConfig {
  int input_size = 128;
  int kernel_size = 5;
  int pool_size = 2;
  int n_filters_stage1 = 32;
  int fc_dim = 8192;
  double dropout_a = 0.5;
  double dropout_b = 0.5;
  double dropout_c = 0.5;
  double noise_sigma = 0.025;
  double learn_rate0 = 0.01;
  double momentum0 = 0.95;
  int max_epochs = 2000;

  /// Throws ContractError when a field is out of range or input_size is not
  /// divisible by pool_size^3.
  void validate() const;
};

/// The ten ensemble member configurations, in table order.
std::vector<UNetConfig> ensemble_configs();

inline constexpr int kInputChannels = 6;
inline constexpr int kOutputChannels = 1;
inline constexpr int kStages = 3;
inline constexpr int kConvsPerStage = 3;
inline constexpr std::int64_t kReferenceParamCount = 543'888'390;

enum class LayerKind { Input, Conv, Pool, Dense, Unpool, Deconv, Output };
std::string to_string(LayerKind k);

struct LayerShape {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;  // 0 for non-convolutional layers
  int height = 0;
  int width = 0;
  std::int64_t params = 0;
};

/// Layer-by-layer shapes: input, three encoder stages of convs + pool, the
/// flatten -> fc_dim -> grid dense pair, three decoder stages of unpool +
/// deconvs whose first layer also takes the mirrored encoder output, and a
/// single-channel output conv.
std::vector<LayerShape> infer_shapes(const UNetConfig& c);

/// k*k*in*out + out
std::int64_t conv_params(int kernel, int in_channels, int out_channels);
/// in*out + out
std::int64_t dense_params(std::int64_t in, std::int64_t out);

std::int64_t param_count(const UNetConfig& c);

struct Schedule {
  double learn_rate = 0.0;
  double momentum = 0.0;
};

inline constexpr double kFinalLearnRate = 0.001;
inline constexpr double kFinalMomentum = 0.99;

/// Linear ramp from (learn_rate0, momentum0) at epoch 1 to the final values
/// at max_epochs.
Schedule schedule(int epoch, const UNetConfig& c);

/// Mean confidence per pixel, then >= 128 -> 255, else 0.
MaskImage fuse_masks(std::span<const MaskImage> masks);

struct EarlyStop {
  bool stop = false;
  std::size_t best_epoch = 0;
};

/// Stops once `patience` epochs have elapsed since the earliest minimum.
EarlyStop early_stop_check(std::span<const double> history, std::size_t patience = 100);

std::string config_to_json(const UNetConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
UNetConfig config_from_json(const std::string& text);

/// Fixed-width text table of infer_shapes followed by the parameter total.
std::string format_layer_table(const UNetConfig& c);

}  // namespace dermo::nettopo
