#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stnet/rng.hpp"
#include "stnet/slicing.hpp"
#include "stnet/tape.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

enum class StreamArch { SimpleCnn, Vgg16Scaled };

std::string_view to_string(StreamArch arch);
std::optional<StreamArch> parse_stream_arch(std::string_view name);

struct StreamSpec {
  StreamArch arch = StreamArch::SimpleCnn;
  /// Channel divisor for Vgg16Scaled; ignored for SimpleCnn.
  std::size_t scale = 1;
};

struct ImageShape {
  std::size_t channels = 3, height = 32, width = 32;

  Shape batch_shape(std::size_t n) const { return {n, channels, height, width}; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Declarative description of a streaming network: stream i consumes slice i.
struct NetworkSpec {
  std::vector<StreamSpec> streams;
  SliceSpec slices;
  std::size_t num_classes = 10;
  ImageShape input;

  /// S identical streams over S uniform-weight slices.
  static NetworkSpec homogeneous(StreamSpec stream, std::size_t count, std::size_t num_classes, ImageShape input);
  void validate() const;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

enum class LayerKind { Conv, Relu, Pool, Flatten, Dense };

struct Layer {
  LayerKind kind;
  /// Index of the weight in the owning stream's parameter list (bias follows it).
  std::size_t param = 0;
};

/// One feature extractor. Owns its parameters; no parameter is shared
/// with any other stream.
class Stream {
 public:
  Stream(StreamArch arch, ImageShape input);

  StreamArch arch() const { return arch_; }
  ImageShape input_shape() const { return input_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t param_count() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<NamedTensor>& params() { return params_; }
  const std::vector<NamedTensor>& params() const { return params_; }

  /// N×C×H×W input in [0,1] → N×feature_dim.
  Var features(Tape& tape, Var input);

  // Builder interface; tracks the running activation shape.
  void add_conv(std::size_t filters, std::size_t kernel, const std::string& name, Rng& rng);
  void add_relu();
  void add_pool();
  void add_flatten();
  void add_dense(std::size_t width, const std::string& name, Rng& rng);
  Shape current_shape() const { return shape_; }

 private:
  StreamArch arch_;
  ImageShape input_;
  Shape shape_;  // per-sample activation shape during building
  std::vector<Layer> layers_;
  std::vector<NamedTensor> params_;
  std::size_t feature_dim_ = 0;
};

/// conv(32,7)→conv(64,5)→conv(128,3)→conv(256,1)→conv(10,1), each followed by
/// relu and a 2×2 pool. The final pool is skipped when the map is already
/// narrower than 2; any earlier collapse is a ConfigError.
Stream build_simple_cnn_stream(ImageShape input, Rng& rng, const std::string& prefix = "");

/// VGG16 with every channel count c replaced by ceil(c/scale), followed by two
/// hidden dense layers of ceil(4096/scale) units with relu.
Stream build_scaled_vgg16_stream(std::size_t scale, ImageShape input, Rng& rng, const std::string& prefix = "");

Stream build_stream(const StreamSpec& spec, ImageShape input, Rng& rng, const std::string& prefix = "");

/// Standalone single network: one stream on the raw image with its own dense+softmax head.
class StandaloneModel {
 public:
  StandaloneModel(Stream stream, std::size_t num_classes, Rng& rng);

  Stream& stream() { return stream_; }
  Tensor& head_weight() { return head_weight_; }
  Tensor& head_bias() { return head_bias_; }
  std::size_t param_count() const;
  /// N×C×H×W in [0,255] → N×K probabilities.
  Tensor predict(const Tensor& batch);

 private:
  Stream stream_;
  Tensor head_weight_, head_bias_;
};

StandaloneModel build_simple_cnn(ImageShape input, std::size_t num_classes, std::uint64_t seed);
StandaloneModel build_scaled_vgg16(std::size_t scale, ImageShape input, std::size_t num_classes, std::uint64_t seed);

/// Scales raw [0,255] pixels into [0,1].
Tensor normalize_pixels(const Tensor& raw);

/// A built streaming network: per-stream parameters plus the joint classifier
/// dense(D_total → K).
class StreamingNetwork {
 public:
  struct Forward {
    Var logits;
    Var joint_features;
    std::vector<Var> stream_features;
  };

  const NetworkSpec& spec() const { return spec_; }
  std::vector<Stream>& streams() { return streams_; }
  const std::vector<Stream>& streams() const { return streams_; }
  Tensor& classifier_weight() { return classifier_weight_; }
  Tensor& classifier_bias() { return classifier_bias_; }
  std::size_t feature_dim() const;
  std::size_t param_count() const;

  /// Every trainable tensor, streams first (in order), classifier last.
  std::vector<Tensor*> parameters();
  std::vector<NamedTensor> named_parameters() const;
  /// Replaces parameter values by name; names and shapes must match exactly.
  void load_parameters(const std::vector<NamedTensor>& values);
  void set_requires_grad(bool on);
  void zero_grad();

  /// Records the forward pass for an N×C×H×W batch of raw [0,255] pixels.
  Forward forward(Tape& tape, const Tensor& batch);
  /// Softmax probabilities without retaining the tape.
  Tensor predict(const Tensor& batch);

 private:
  friend StreamingNetwork build_streaming_network(const NetworkSpec& spec, std::uint64_t seed);
  explicit StreamingNetwork(NetworkSpec spec) : spec_(std::move(spec)) {}

  NetworkSpec spec_;
  std::vector<Stream> streams_;
  Tensor classifier_weight_, classifier_bias_;
};

StreamingNetwork build_streaming_network(const NetworkSpec& spec, std::uint64_t seed);

/// Row-wise softmax of N×K logits (used by predict paths).
Tensor softmax_rows(const Tensor& logits);

}  // namespace stnet
