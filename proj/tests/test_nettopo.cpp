#include <gtest/gtest.h>

#include <algorithm>

#include "dermo/errors.hpp"
#include "dermo/nettopo.hpp"
#include "dermo/random.hpp"

using namespace dermo;
using namespace dermo::nettopo;

namespace {

std::vector<int> heights_of(const std::vector<LayerShape>& layers, LayerKind kind) {
  std::vector<int> out;
  for (const auto& l : layers)
    if (l.kind == kind) out.push_back(l.height);
  return out;
}

}  // namespace

TEST(Configs, TableRows) {
  const auto rows = ensemble_configs();
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0].fc_dim, 8192);
  EXPECT_EQ(rows[5].fc_dim, 256);
  EXPECT_EQ(rows[6].kernel_size, 3);
  EXPECT_EQ(rows[6].n_filters_stage1, 16);
  EXPECT_EQ(rows[7].dropout_b, 0.75);
  EXPECT_EQ(rows[9].input_size, 64);
  for (const auto& r : rows) EXPECT_NO_THROW(r.validate());
}

TEST(Configs, ValidateRejectsIndivisibleInput) {
  UNetConfig c;
  c.input_size = 100;
  EXPECT_THROW(c.validate(), ContractError);
  EXPECT_THROW(infer_shapes(c), ContractError);
}

TEST(Shapes, RowOneResolutions) {
  const auto layers = infer_shapes(ensemble_configs().front());
  EXPECT_EQ(heights_of(layers, LayerKind::Pool), (std::vector<int>{64, 32, 16}));
  EXPECT_EQ(heights_of(layers, LayerKind::Unpool), (std::vector<int>{32, 64, 128}));
  EXPECT_EQ(layers.front().height, 128);
  EXPECT_EQ(layers.front().out_channels, 6);
  EXPECT_EQ(layers.back().height, 128);
  EXPECT_EQ(layers.back().out_channels, 1);
}

TEST(Shapes, BottleneckOfSmallInput) {
  UNetConfig c;
  c.input_size = 64;
  const auto pools = heights_of(infer_shapes(c), LayerKind::Pool);
  EXPECT_EQ(pools.back(), 8);
}

TEST(Shapes, DecoderKernels) {
  const auto layers = infer_shapes(ensemble_configs().front());
  for (const auto& l : layers) {
    if (l.kind != LayerKind::Deconv) continue;
    EXPECT_EQ(l.kernel, l.name.ends_with("_1") ? 11 : 5) << l.name;
  }
}

TEST(Shapes, MirrorSymmetryProperty) {
  for (const auto& c : ensemble_configs()) {
    const auto layers = infer_shapes(c);
    auto enc = heights_of(layers, LayerKind::Conv);
    const auto dec = heights_of(layers, LayerKind::Deconv);
    std::reverse(enc.begin(), enc.end());
    EXPECT_EQ(enc, dec);
    EXPECT_EQ(layers.back().height, c.input_size);
  }
}

TEST(Params, UnitCases) {
  EXPECT_EQ(conv_params(5, 6, 32), 4832);
  EXPECT_EQ(dense_params(16 * 16 * 128, 8192), 268443648);
  const auto layers = infer_shapes(ensemble_configs().front());
  std::int64_t sum = 0;
  for (const auto& l : layers) sum += l.params;
  EXPECT_EQ(sum, param_count(ensemble_configs().front()));
}

TEST(Params, DoublingFiltersQuadruplesInnerConvs) {
  UNetConfig a;
  UNetConfig b = a;
  b.n_filters_stage1 *= 2;
  const auto la = infer_shapes(a), lb = infer_shapes(b);
  ASSERT_EQ(la.size(), lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    const bool conv = la[i].kind == LayerKind::Conv || la[i].kind == LayerKind::Deconv;
    if (!conv || la[i].in_channels == kInputChannels) continue;
    const double ratio = double(lb[i].params) / double(la[i].params);
    EXPECT_GT(ratio, 3.9) << la[i].name;
    EXPECT_LE(ratio, 4.0) << la[i].name;
  }
}

TEST(Params, MonotoneInFcAndFiltersProperty) {
  UNetConfig c;
  std::int64_t prev = 0;
  for (int fc : {256, 512, 1024, 2048, 4096, 8192}) {
    c.fc_dim = fc;
    EXPECT_GT(param_count(c), prev);
    prev = param_count(c);
  }
  prev = 0;
  for (int f : {8, 16, 32, 64}) {
    c.n_filters_stage1 = f;
    EXPECT_GT(param_count(c), prev);
    prev = param_count(c);
  }
}

TEST(Schedule, EndpointsAndMidpoint) {
  UNetConfig c;
  c.max_epochs = 3;
  const auto first = schedule(1, c), mid = schedule(2, c), last = schedule(3, c);
  EXPECT_DOUBLE_EQ(first.learn_rate, 0.01);
  EXPECT_DOUBLE_EQ(first.momentum, 0.95);
  EXPECT_NEAR(mid.learn_rate, 0.0055, 1e-15);
  EXPECT_NEAR(mid.momentum, 0.97, 1e-15);
  EXPECT_NEAR(last.learn_rate, 0.001, 1e-15);
  EXPECT_NEAR(last.momentum, 0.99, 1e-15);
  EXPECT_THROW(schedule(0, c), ContractError);
  EXPECT_THROW(schedule(4, c), ContractError);
}

TEST(Schedule, MonotoneProperty) {
  const auto c = ensemble_configs().front();
  auto prev = schedule(1, c);
  for (int e = 2; e <= c.max_epochs; e += 7) {
    const auto s = schedule(e, c);
    EXPECT_LE(s.learn_rate, prev.learn_rate);
    EXPECT_GE(s.momentum, prev.momentum);
    prev = s;
  }
}

TEST(FuseMasks, Examples) {
  MaskImage m(3, 2);
  m.at(0, 1) = m.at(1, 2) = 255;
  EXPECT_EQ(fuse_masks(std::vector<MaskImage>(10, m)), m);
  std::vector<MaskImage> split;
  for (int i = 0; i < 10; ++i) split.emplace_back(3, 2, i < 5 ? 255 : 0);
  EXPECT_EQ(fuse_masks(split), MaskImage(3, 2, 0));
  EXPECT_EQ(fuse_masks(std::vector<MaskImage>{MaskImage(3, 2, 128)}), MaskImage(3, 2, 255));
  EXPECT_EQ(fuse_masks(std::vector<MaskImage>{MaskImage(3, 2, 127)}), MaskImage(3, 2, 0));
}

TEST(FuseMasks, Errors) {
  EXPECT_THROW(fuse_masks(std::vector<MaskImage>{}), ContractError);
  EXPECT_THROW(fuse_masks(std::vector<MaskImage>{MaskImage(2, 2), MaskImage(3, 2)}), ContractError);
}

TEST(FuseMasks, BinaryAndPermutationInvariantProperty) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MaskImage> masks;
    for (int k = 0; k < 1 + int(rng.index(9)); ++k) {
      MaskImage m(5, 4);
      for (auto& v : m.values()) v = std::uint8_t(rng.index(256));
      masks.push_back(m);
    }
    const auto fused = fuse_masks(masks);
    EXPECT_TRUE(fused.is_binary());
    rng.shuffle(masks);
    EXPECT_EQ(fuse_masks(masks), fused);
  }
}

TEST(EarlyStop, Examples) {
  std::vector<double> decreasing;
  for (int i = 0; i < 300; ++i) decreasing.push_back(300.0 - i);
  EXPECT_FALSE(early_stop_check(decreasing).stop);

  const auto flat = early_stop_check(std::vector<double>(101, 1.0));
  EXPECT_TRUE(flat.stop);
  EXPECT_EQ(flat.best_epoch, 0u);
  EXPECT_FALSE(early_stop_check(std::vector<double>(100, 1.0)).stop);

  std::vector<double> dip(106, 2.0);
  dip[5] = 1.0;
  const auto r = early_stop_check(dip);
  EXPECT_TRUE(r.stop);
  EXPECT_EQ(r.best_epoch, 5u);
}

TEST(ConfigJson, RoundTripAndUnknownKeys) {
  const auto c = ensemble_configs()[8];
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(back.dropout_a, c.dropout_a);
  EXPECT_EQ(back.fc_dim, c.fc_dim);
  EXPECT_EQ(config_from_json("{\"fc_dim\": 512}").fc_dim, 512);
  EXPECT_THROW(config_from_json("{\"fcdim\": 512}"), ValidationError);
  EXPECT_THROW(config_from_json("{\"input_size\": 100}"), ValidationError);
}

TEST(LayerTable, MentionsTotal) {
  const auto text = format_layer_table(ensemble_configs().front());
  EXPECT_NE(text.find("conv1_1"), std::string::npos);
  EXPECT_NE(text.find(std::to_string(param_count(ensemble_configs().front()))), std::string::npos);
}
