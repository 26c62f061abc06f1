#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "orient/evaluator.hpp"
#include "orient/netspec.hpp"
#include "test_util.hpp"

using namespace orient;
using orient::testing::random_tensor;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "orient_netspec_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

const LayerSpec* find(const NetworkSpec& spec, const std::string& name) {
  for (const auto& l : spec.layers) {
    if (l.name == name) {
      return &l;
    }
  }
  return nullptr;
}

}  // namespace

TEST(PaperNet, EndsInFourWaySoftmax) {
  const NetworkSpec spec = build_paper_net();
  ASSERT_GE(spec.layers.size(), 2U);
  EXPECT_EQ(spec.layers.back().kind, LayerKind::softmax_xent);
  const LayerSpec& last_fc = spec.layers[spec.layers.size() - 2];
  EXPECT_EQ(last_fc.kind, LayerKind::fully_connected);
  EXPECT_EQ(last_fc.out_features, 4U);
  EXPECT_EQ(layer_output_shapes(spec).back(), (Shape{4}));
}

TEST(PaperNet, DropoutRateIsHalf) {
  std::size_t dropouts = 0;
  for (const auto& l : build_paper_net().layers) {
    if (l.kind == LayerKind::dropout) {
      EXPECT_EQ(l.dropout_rate, 0.5F);
      ++dropouts;
    }
  }
  EXPECT_EQ(dropouts, 2U);
}

TEST(PaperNet, LayerPattern) {
  const NetworkSpec spec = build_paper_net();
  EXPECT_EQ(spec.input_shape, (std::array<std::size_t, 3>{3, 256, 256}));
  const auto* conv1 = find(spec, "conv1");
  ASSERT_NE(conv1, nullptr);
  EXPECT_EQ(conv1->out_channels, 96U);
  EXPECT_EQ(conv1->kernel, 11U);
  EXPECT_EQ(conv1->stride, 4U);
  EXPECT_EQ(find(spec, "conv2")->pad, 2U);
  EXPECT_EQ(find(spec, "conv5")->out_channels, 256U);
  EXPECT_EQ(find(spec, "fc6")->out_features, 4096U);
  EXPECT_EQ(find(spec, "fc7")->out_features, 4096U);

  std::vector<std::string> pooled_after;
  std::vector<std::string> normalized_after;
  std::string last_conv;
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::conv) {
      last_conv = l.name;
    } else if (l.kind == LayerKind::maxpool) {
      EXPECT_EQ(l.window, 3U);
      EXPECT_EQ(l.stride, 2U);
      pooled_after.push_back(last_conv);
    } else if (l.kind == LayerKind::lrn) {
      normalized_after.push_back(last_conv);
    }
  }
  EXPECT_EQ(pooled_after, (std::vector<std::string>{"conv1", "conv2", "conv5"}));
  EXPECT_EQ(normalized_after, (std::vector<std::string>{"conv1", "conv2"}));
}

TEST(PaperNet, ShapesComposeLayerByLayer) {
  const NetworkSpec spec = build_paper_net();
  const auto shapes = layer_output_shapes(spec);
  ASSERT_EQ(shapes.size(), spec.layers.size());
  Shape previous{3, 256, 256};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind == LayerKind::conv) {
      const Shape expected_out = {l.out_channels, (previous[1] + 2 * l.pad - l.kernel) / l.stride + 1,
                                  (previous[2] + 2 * l.pad - l.kernel) / l.stride + 1};
      EXPECT_EQ(shapes[i], expected_out) << l.name;
    } else if (l.kind == LayerKind::maxpool) {
      EXPECT_EQ(shapes[i], (Shape{previous[0], (previous[1] - l.window) / l.stride + 1,
                                  (previous[2] - l.window) / l.stride + 1}))
          << l.name;
    } else if (l.kind == LayerKind::fully_connected) {
      EXPECT_EQ(shapes[i], (Shape{l.out_features})) << l.name;
    } else {
      EXPECT_EQ(shape_volume(shapes[i]), shape_volume(previous)) << l.name;
    }
    previous = shapes[i];
  }
  EXPECT_EQ(shapes[last_conv_index(spec)], (Shape{256, 14, 14}));
}

TEST(PaperNet, FrozenLayersAreConv1To3) {
  std::set<std::string> frozen;
  for (const auto& l : build_paper_net().layers) {
    if (l.frozen) {
      frozen.insert(l.name);
    }
  }
  EXPECT_EQ(frozen, (std::set<std::string>{"conv1", "conv2", "conv3"}));
}

TEST(PaperNet, FcLayersUseTwentyTimesGlobalRate) {
  for (const auto& l : build_paper_net().layers) {
    if (l.kind == LayerKind::fully_connected) {
      EXPECT_FLOAT_EQ(l.lr_multiplier * 5e-4F, 0.01F) << l.name;
    } else if (l.kind == LayerKind::conv) {
      EXPECT_EQ(l.lr_multiplier, 1.0F) << l.name;
    }
  }
}

TEST(PaperNet, ZeroImageGivesFiniteLogits) {
  const NetworkSpec spec = build_paper_net();
  Rng rng(1);
  const Network net(spec, init_weights(spec, rng, 0.01F));
  const Tensor logits = net.infer(Tensor({1, 3, 256, 256}));
  EXPECT_EQ(logits.shape(), (Shape{1, 4}));
  EXPECT_TRUE(logits.all_finite());
}

TEST(PaperNet, CompactVariantHasSingleNarrowFc) {
  const NetworkSpec spec = build_paper_net({true});
  EXPECT_EQ(find(spec, "fc6")->out_features, 1024U);
  EXPECT_EQ(find(spec, "fc7"), nullptr);
  EXPECT_EQ(layer_output_shapes(spec).back(), (Shape{4}));
}

TEST(DeskNet, DefaultIsSmall) {
  const NetworkSpec spec = build_desk_net();
  EXPECT_LT(parameter_count(expected_parameter_shapes(spec)), 1'000'000U);
  EXPECT_EQ(spec.input_shape, (std::array<std::size_t, 3>{3, 64, 64}));
}

TEST(DeskNet, ForwardShape) {
  const NetworkSpec spec = build_desk_net();
  Rng rng(2);
  Network net(spec, init_weights(spec, rng, 0.01F));
  const Tensor logits = net.forward(random_tensor({2, 3, 64, 64}, rng, -100.0F, 100.0F), Mode::train, rng);
  EXPECT_EQ(logits.shape(), (Shape{2, 4}));
}

TEST(DeskNet, InputSideOnlyChangesSpatialExtents) {
  const auto a = layer_output_shapes(build_desk_net({64}));
  const auto b = layer_output_shapes(build_desk_net({96}));
  const NetworkSpec spec = build_desk_net({64});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    if (spec.layers[i].kind == LayerKind::fully_connected || a[i].size() == 1) {
      EXPECT_EQ(a[i], b[i]);
    } else {
      EXPECT_EQ(a[i][0], b[i][0]) << spec.layers[i].name;
    }
  }
  const auto pa = expected_parameter_shapes(build_desk_net({64}));
  const auto pb = expected_parameter_shapes(build_desk_net({96}));
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].weights.rank() == 4) {
      EXPECT_EQ(pa[i].weights.shape(), pb[i].weights.shape());
    }
  }
}

TEST(DeskNet, RejectsTinyInputs) {
  EXPECT_THROW(build_desk_net({8}), ShapeError);
  EXPECT_THROW(build_desk_net({16}), ShapeError);
}

TEST(DeskNet, FreezePatternFollowsOption) {
  DeskNetOptions o;
  o.frozen_convs = 2;
  const NetworkSpec spec = build_desk_net(o);
  EXPECT_TRUE(find(spec, "conv1")->frozen);
  EXPECT_TRUE(find(spec, "conv2")->frozen);
  EXPECT_FALSE(find(spec, "conv3")->frozen);
}

TEST(InitWeights, EmpiricalStd) {
  NetworkSpec spec = build_desk_net();
  Rng rng(3);
  const ParameterSet params = init_weights(spec, rng, 0.01F);
  bool checked = false;
  for (const auto& p : params) {
    if (p.weights.size() >= 10000) {
      double sum = 0.0;
      double sq = 0.0;
      for (const float v : p.weights.data()) {
        sum += v;
        sq += static_cast<double>(v) * v;
      }
      const double n = static_cast<double>(p.weights.size());
      const double mean = sum / n;
      EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 0.01, 0.0005) << p.layer;
      EXPECT_NEAR(mean, 0.0, 0.0005) << p.layer;
      checked = true;
    }
    for (const float b : p.bias.data()) {
      EXPECT_EQ(b, 0.0F);
    }
  }
  EXPECT_TRUE(checked);
}

TEST(InitWeights, SameSeedSameBits) {
  const NetworkSpec spec = build_desk_net();
  Rng a(42);
  Rng b(42);
  EXPECT_EQ(init_weights(spec, a, 0.01F), init_weights(spec, b, 0.01F));
}

TEST(InitWeights, RejectsNonPositiveStd) {
  Rng rng(1);
  EXPECT_THROW(init_weights(build_desk_net(), rng, 0.0F), UsageError);
}

TEST(SpecJson, RoundTrip) {
  for (const auto& spec : {build_paper_net(), build_desk_net(), build_paper_net({true})}) {
    EXPECT_EQ(network_spec_from_json(to_json(spec)), spec);
  }
}

namespace {

Checkpoint desk_checkpoint(std::uint64_t seed) {
  const NetworkSpec spec = build_desk_net();
  Rng rng(seed);
  return {spec, init_weights(spec, rng, 0.05F), {7, seed, {100.0F, 110.0F, 120.0F}}};
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_all(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint ckpt = desk_checkpoint(5);
  const auto path = temp_path("roundtrip.ornt");
  save_checkpoint(path, ckpt);
  const Checkpoint loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.spec, ckpt.spec);
  EXPECT_EQ(loaded.params, ckpt.params);
  EXPECT_EQ(loaded.meta, ckpt.meta);
  const auto bytes = read_all(path);
  ASSERT_GE(bytes.size(), 8U);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ORNT");
  EXPECT_EQ(bytes[4], kCheckpointVersion);
}

TEST(Checkpoint, PredictionsSurviveSaveLoad) {
  const Checkpoint ckpt = desk_checkpoint(6);
  const auto path = temp_path("predict.ornt");
  save_checkpoint(path, ckpt);
  const Predictor before(ckpt);
  const Predictor after(load_checkpoint(path));
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    const Tensor img = random_tensor({3, 64, 64}, rng, 0.0F, 255.0F);
    const Prediction a = before.predict(img);
    const Prediction b = after.predict(img);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.probabilities, b.probabilities);
  }
}

TEST(Checkpoint, BadMagic) {
  auto bytes = serialize_checkpoint(desk_checkpoint(1));
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bytes), BadMagicError);
  const auto path = temp_path("badmagic.ornt");
  write_all(path, bytes);
  EXPECT_THROW(load_checkpoint(path), BadMagicError);
}

TEST(Checkpoint, UnsupportedVersion) {
  auto bytes = serialize_checkpoint(desk_checkpoint(1));
  bytes[4] = 99;
  EXPECT_THROW(deserialize_checkpoint(bytes), UnsupportedVersionError);
}

TEST(Checkpoint, TruncationByOneByte) {
  const auto path = temp_path("trunc.ornt");
  save_checkpoint(path, desk_checkpoint(2));
  auto bytes = read_all(path);
  bytes.pop_back();
  write_all(path, bytes);
  EXPECT_THROW(load_checkpoint(path), TruncatedCheckpointError);
}

TEST(Checkpoint, TrailingBytesRejected) {
  auto bytes = serialize_checkpoint(desk_checkpoint(2));
  bytes.push_back(0);
  EXPECT_THROW(deserialize_checkpoint(bytes), CheckpointError);
}

TEST(Checkpoint, MismatchedParametersRejected) {
  Checkpoint ckpt = desk_checkpoint(3);
  ckpt.params[0].weights = Tensor({2, 2});
  EXPECT_THROW(Network(ckpt.spec, ckpt.params), CheckpointMismatchError);
  EXPECT_THROW(deserialize_checkpoint(serialize_checkpoint(ckpt)), CheckpointMismatchError);
}

TEST(Checkpoint, ErrorsAreDataErrors) {
  EXPECT_THROW(deserialize_checkpoint(std::vector<std::uint8_t>{'O', 'R'}), DataError);
}
