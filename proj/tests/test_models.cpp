#include <gtest/gtest.h>

#include "helpers.hpp"
#include "stnet/errors.hpp"
#include "stnet/models.hpp"
#include "stnet/tape.hpp"

using namespace stnet;

namespace {

constexpr ImageShape kCifar{3, 32, 32};

Tensor stream_features(Stream& s, const Tensor& input01) {
  Tape tape;
  return tape.value(s.features(tape, tape.constant(input01)));
}

}  // namespace

TEST(SimpleCnn, FeatureLengths) {
  Rng rng(1);
  EXPECT_EQ(build_simple_cnn_stream(kCifar, rng).feature_dim(), 10u);
  EXPECT_EQ(build_simple_cnn_stream({3, 128, 191}, rng).feature_dim(), 200u);
  // 16×16 collapses to 1×1 after four pools; the last pool is skipped.
  EXPECT_EQ(build_simple_cnn_stream({3, 16, 16}, rng).feature_dim(), 10u);
  EXPECT_THROW(build_simple_cnn_stream({3, 4, 4}, rng), ConfigError);
}

TEST(SimpleCnn, LayerStructureAndStageOneCount) {
  Rng rng(2);
  Stream s = build_simple_cnn_stream(kCifar, rng);
  const auto& p = s.params();
  ASSERT_EQ(p.size(), 10u);
  EXPECT_EQ(p[0].tensor.shape(), (Shape{32, 3, 7, 7}));
  EXPECT_EQ(p[0].tensor.size() + p[1].tensor.size(), 4736u);
  EXPECT_EQ(p[2].tensor.shape(), (Shape{64, 32, 5, 5}));
  EXPECT_EQ(p[4].tensor.shape(), (Shape{128, 64, 3, 3}));
  EXPECT_EQ(p[6].tensor.shape(), (Shape{256, 128, 1, 1}));
  EXPECT_EQ(p[8].tensor.shape(), (Shape{10, 256, 1, 1}));
  for (std::size_t i = 1; i < p.size(); i += 2)
    for (float b : p[i].tensor.data()) EXPECT_EQ(b, 0.0f);
}

TEST(SimpleCnn, StandaloneHeadProbabilities) {
  StandaloneModel m = build_simple_cnn(kCifar, 10, 3);
  EXPECT_EQ(m.param_count(), m.stream().param_count() + 10 * 10 + 10);
  Rng rng(4);
  Tensor probs = m.predict(test::random_image({2, 3, 32, 32}, rng));
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0;
    for (std::size_t k = 0; k < 10; ++k) s += probs[r * 10 + k];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(ScaledVgg16, ChannelsAndMonotoneSize) {
  std::size_t prev = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    Rng rng(5);
    Stream s = build_scaled_vgg16_stream(n, kCifar, rng);
    EXPECT_EQ(s.params()[0].tensor.dim(0), (64 + n - 1) / n);
    EXPECT_EQ(s.feature_dim(), (4096 + n - 1) / n);
    if (n > 1) EXPECT_LT(s.param_count(), prev);
    prev = s.param_count();
  }
  Rng rng(6);
  EXPECT_EQ(build_scaled_vgg16_stream(5, kCifar, rng).params()[0].tensor.dim(0), 13u);
  EXPECT_THROW(build_scaled_vgg16_stream(0, kCifar, rng), ValidationError);
}

TEST(ScaledVgg16, ChannelTable) {
  Rng rng(7);
  Stream s = build_scaled_vgg16_stream(3, kCifar, rng);
  const std::size_t table[] = {64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512};
  std::size_t conv = 0;
  for (const auto& p : s.params()) {
    if (p.tensor.rank() != 4) continue;
    ASSERT_LT(conv, 13u);
    EXPECT_EQ(p.tensor.dim(0), (table[conv] + 2) / 3) << p.name;
    EXPECT_EQ(p.tensor.dim(2), 3u);
    ++conv;
  }
  EXPECT_EQ(conv, 13u);
}

TEST(StreamingNetwork, HomogeneousFeatureTotal) {
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 5, 10, kCifar), 1);
  EXPECT_EQ(net.feature_dim(), 50u);
  EXPECT_EQ(net.classifier_weight().shape(), (Shape{50, 10}));
}

TEST(StreamingNetwork, HybridSixStreams) {
  NetworkSpec spec;
  spec.streams.push_back({StreamArch::Vgg16Scaled, 5});
  for (int i = 0; i < 5; ++i) spec.streams.push_back({StreamArch::SimpleCnn, 1});
  spec.slices = SliceSpec::uniform(6);
  spec.num_classes = 10;
  spec.input = kCifar;
  auto net = build_streaming_network(spec, 2);
  ASSERT_EQ(net.streams().size(), 6u);
  EXPECT_EQ(net.feature_dim(), net.streams()[0].feature_dim() + 5 * 10);
  EXPECT_EQ(net.feature_dim(), 820u + 50u);
  Rng rng(3);
  Tensor probs = net.predict(test::random_image({1, 3, 32, 32}, rng));
  EXPECT_EQ(probs.shape(), (Shape{1, 10}));
}

TEST(StreamingNetwork, SliceCountMustMatchStreams) {
  auto spec = NetworkSpec::homogeneous({}, 3, 10, kCifar);
  spec.slices = SliceSpec::uniform(2);
  EXPECT_THROW(build_streaming_network(spec, 0), ValidationError);
}

TEST(StreamingNetwork, ParamCountIsAdditive) {
  auto net3 = build_streaming_network(NetworkSpec::homogeneous({}, 3, 10, kCifar), 1);
  auto net6 = build_streaming_network(NetworkSpec::homogeneous({}, 6, 10, kCifar), 1);
  std::size_t sum = net3.classifier_weight().size() + net3.classifier_bias().size();
  for (const auto& s : net3.streams()) sum += s.param_count();
  EXPECT_EQ(net3.param_count(), sum);
  const std::size_t stream = net3.streams()[0].param_count();
  EXPECT_EQ(net6.param_count() - net3.param_count(), 3 * stream + 30 * 10);
  auto net4 = build_streaming_network(NetworkSpec::homogeneous({}, 4, 10, kCifar), 1);
  EXPECT_EQ(net4.param_count() - net3.param_count(), stream + 10 * 10);
}

TEST(StreamingNetwork, ForwardIsManualComposition) {
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 3, 4, kCifar), 5);
  Rng rng(6);
  Tensor batch = test::random_image({2, 3, 32, 32}, rng);
  Tensor probs = net.predict(batch);

  // classifier(concat_i(stream_i(slice_i(x) / 255)))
  std::vector<std::vector<float>> feats;
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor slice = batch;
    for (float& v : slice.storage()) v = (std::min<int>(static_cast<int>(v) * 3 / 256, 2) == static_cast<int>(i)) ? v / 255.0f : 0.0f;
    Tensor f = stream_features(net.streams()[i], slice);
    feats.push_back(f.storage());
  }
  for (std::size_t r = 0; r < 2; ++r) {
    std::vector<double> logits(4);
    for (std::size_t k = 0; k < 4; ++k) {
      double acc = net.classifier_bias()[k];
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t d = 0; d < 10; ++d) acc += feats[i][r * 10 + d] * net.classifier_weight()[(i * 10 + d) * 4 + k];
      logits[k] = acc;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double l : logits) z += std::exp(l - m);
    double row = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(probs[r * 4 + k], std::exp(logits[k] - m) / z, 1e-5);
      row += probs[r * 4 + k];
    }
    EXPECT_NEAR(row, 1.0, 1e-6);
  }
}

TEST(StreamingNetwork, SingleStreamEqualsStandaloneBitForBit) {
  StandaloneModel plain = build_simple_cnn(kCifar, 10, 11);
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 1, 10, kCifar), 12);
  auto& dst = net.streams()[0].params();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i].tensor = plain.stream().params()[i].tensor;
  net.classifier_weight() = plain.head_weight();
  net.classifier_bias() = plain.head_bias();
  Rng rng(13);
  Tensor batch = test::random_image({3, 3, 32, 32}, rng);
  EXPECT_EQ(net.predict(batch), plain.predict(batch));
}

TEST(StreamingNetwork, StreamsAreIndependent) {
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 3, 10, kCifar), 7);
  Rng rng(8);
  Tensor batch = test::random_image({2, 3, 32, 32}, rng);
  auto features = [&] {
    Tape tape;
    auto fwd = net.forward(tape, batch);
    std::vector<Tensor> out;
    for (Var v : fwd.stream_features) out.push_back(tape.value(v));
    return out;
  };
  const auto before = features();
  for (float& w : net.streams()[1].params()[0].tensor.storage()) w *= -1.5f;
  const auto after = features();
  EXPECT_EQ(before[0], after[0]);
  EXPECT_EQ(before[2], after[2]);
  EXPECT_NE(before[1], after[1]);
}

TEST(StreamingNetwork, MaskingOtherStreamLeavesGradientUnchanged) {
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 2, 3, {3, 16, 16}), 9);
  net.set_requires_grad(true);
  Rng rng(10);
  Tensor batch = test::random_image({4, 3, 16, 16}, rng);
  Tensor coeffs = test::random_tensor({4, 3}, rng);
  // A loss linear in the logits: stream 0's gradient may depend only on its
  // own features and classifier rows.
  auto stream0_grad = [&] {
    Tape tape;
    auto fwd = net.forward(tape, batch);
    tape.backward(tape.dot(fwd.logits, coeffs));
    const auto g = net.streams()[0].params()[0].tensor.grad();
    return std::vector<float>(g.begin(), g.end());
  };
  const auto before = stream0_grad();
  for (std::size_t d = 10; d < 20; ++d)
    for (std::size_t k = 0; k < 3; ++k) net.classifier_weight()[d * 3 + k] = 0.0f;
  EXPECT_EQ(stream0_grad(), before);
}

TEST(StreamingNetwork, ConcatenationKeepsStreamOrder) {
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 3, 3, kCifar), 21);
  Rng rng(22);
  Tensor batch = test::random_image({2, 3, 32, 32}, rng);
  Tape tape;
  auto fwd = net.forward(tape, batch);
  const Tensor& joint = tape.value(fwd.joint_features);
  ASSERT_EQ(joint.shape(), (Shape{2, 30}));
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor& f = tape.value(fwd.stream_features[i]);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t d = 0; d < 10; ++d) EXPECT_EQ(joint[r * 30 + i * 10 + d], f[r * 10 + d]);
  }
}

TEST(StreamingNetwork, WrongInputShape) {
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 1, 10, kCifar), 1);
  EXPECT_THROW(net.predict(Tensor({1, 3, 16, 16})), ShapeError);
}

TEST(StreamingNetwork, NamedParametersRoundTrip) {
  auto a = build_streaming_network(NetworkSpec::homogeneous({}, 2, 5, kCifar), 1);
  auto b = build_streaming_network(NetworkSpec::homogeneous({}, 2, 5, kCifar), 2);
  const auto named = a.named_parameters();
  EXPECT_EQ(named.front().name, "stream0.conv1.weight");
  EXPECT_EQ(named.back().name, "classifier.bias");
  b.load_parameters(named);
  Rng rng(3);
  Tensor batch = test::random_image({2, 3, 32, 32}, rng);
  EXPECT_EQ(a.predict(batch), b.predict(batch));
  auto bad = named;
  bad.pop_back();
  EXPECT_THROW(b.load_parameters(bad), ValidationError);
}
