#include "stnet/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "stnet/errors.hpp"

namespace stnet {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

Var classifier_logits(Tape& tape, Var features, Tensor& weight, Tensor& bias) {
  return tape.dense(features, tape.parameter(weight), tape.parameter(bias));
}

}  // namespace

std::string_view to_string(StreamArch arch) {
  switch (arch) {
    case StreamArch::SimpleCnn: return "simple_cnn";
    case StreamArch::Vgg16Scaled: return "vgg16_scaled";
  }
  return "unknown";
}

std::optional<StreamArch> parse_stream_arch(std::string_view name) {
  if (name == "simple_cnn") return StreamArch::SimpleCnn;
  if (name == "vgg16_scaled") return StreamArch::Vgg16Scaled;
  return std::nullopt;
}

NetworkSpec NetworkSpec::homogeneous(StreamSpec stream, std::size_t count, std::size_t num_classes,
                                     ImageShape input) {
  NetworkSpec spec;
  spec.streams.assign(count, stream);
  spec.slices = SliceSpec::uniform(count);
  spec.num_classes = num_classes;
  spec.input = input;
  return spec;
}

void NetworkSpec::validate() const {
  if (streams.empty()) throw ValidationError("network needs at least one stream");
  slices.validate();
  if (slices.n != streams.size()) {
    throw ValidationError("network has " + std::to_string(streams.size()) + " streams but slice spec n = " +
                          std::to_string(slices.n));
  }
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
  if (input.channels < 1 || input.height < 1 || input.width < 1) {
    throw ValidationError("input shape must be positive");
  }
  for (const auto& s : streams) {
    if (s.scale < 1) throw ValidationError("stream scale must be >= 1");
  }
}

// ---- Stream -------------------------------------------------------------

Stream::Stream(StreamArch arch, ImageShape input)
    : arch_(arch), input_(input), shape_{input.channels, input.height, input.width} {}

std::size_t Stream::param_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.tensor.size();
  return total;
}

void Stream::add_conv(std::size_t filters, std::size_t kernel, const std::string& name, Rng& rng) {
  if (shape_.size() != 3) throw ConfigError("conv layer must follow a spatial layer");
  const std::size_t channels = shape_[0];
  layers_.push_back({LayerKind::Conv, params_.size()});
  params_.push_back({name + ".weight", he_uniform({filters, channels, kernel, kernel}, channels * kernel * kernel, rng)});
  params_.push_back({name + ".bias", Tensor({filters})});
  shape_[0] = filters;
}

void Stream::add_relu() { layers_.push_back({LayerKind::Relu}); }

void Stream::add_pool() {
  if (shape_.size() != 3 || shape_[1] < 2 || shape_[2] < 2) {
    throw ConfigError("pooling would collapse the feature map " + to_string(shape_) + " to zero extent");
  }
  layers_.push_back({LayerKind::Pool});
  shape_[1] /= 2;
  shape_[2] /= 2;
}

void Stream::add_flatten() {
  layers_.push_back({LayerKind::Flatten});
  shape_ = {numel(shape_)};
  feature_dim_ = shape_[0];
}

void Stream::add_dense(std::size_t width, const std::string& name, Rng& rng) {
  if (shape_.size() != 1) throw ConfigError("dense layer must follow flatten");
  const std::size_t in = shape_[0];
  layers_.push_back({LayerKind::Dense, params_.size()});
  params_.push_back({name + ".weight", he_uniform({in, width}, in, rng)});
  params_.push_back({name + ".bias", Tensor({width})});
  shape_ = {width};
  feature_dim_ = width;
}

Var Stream::features(Tape& tape, Var input) {
  const Tensor& x = tape.value(input);
  if (x.rank() != 4 || x.dim(1) != input_.channels || x.dim(2) != input_.height || x.dim(3) != input_.width) {
    throw ShapeError("stream expects N×" + std::to_string(input_.channels) + "×" + std::to_string(input_.height) +
                     "×" + std::to_string(input_.width) + " input, got " + to_string(x.shape()));
  }
  Var v = input;
  for (const Layer& layer : layers_) {
    switch (layer.kind) {
      case LayerKind::Conv:
        v = tape.conv2d(v, tape.parameter(params_[layer.param].tensor),
                        tape.parameter(params_[layer.param + 1].tensor));
        break;
      case LayerKind::Relu:
        v = tape.relu(v);
        break;
      case LayerKind::Pool:
        v = tape.maxpool2(v);
        break;
      case LayerKind::Flatten:
        v = tape.flatten(v);
        break;
      case LayerKind::Dense:
        v = tape.dense(v, tape.parameter(params_[layer.param].tensor),
                       tape.parameter(params_[layer.param + 1].tensor));
        break;
    }
  }
  return v;
}

Stream build_simple_cnn_stream(ImageShape input, Rng& rng, const std::string& prefix) {
  constexpr std::array<std::pair<std::size_t, std::size_t>, 5> stages{{{32, 7}, {64, 5}, {128, 3}, {256, 1}, {10, 1}}};
  Stream s(StreamArch::SimpleCnn, input);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    s.add_conv(stages[i].first, stages[i].second, join(prefix, "conv" + std::to_string(i + 1)), rng);
    s.add_relu();
    const Shape shape = s.current_shape();
    const bool last = i + 1 == stages.size();
    if (last && (shape[1] < 2 || shape[2] < 2)) continue;
    s.add_pool();
  }
  s.add_flatten();
  return s;
}

Stream build_scaled_vgg16_stream(std::size_t scale, ImageShape input, Rng& rng, const std::string& prefix) {
  if (scale < 1) throw ValidationError("VGG16 scale must be >= 1");
  struct Block {
    std::size_t channels, convs;
  };
  constexpr std::array<Block, 5> blocks{{{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}}};
  Stream s(StreamArch::Vgg16Scaled, input);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t k = 0; k < blocks[b].convs; ++k) {
      s.add_conv(ceil_div(blocks[b].channels, scale), 3,
                 join(prefix, "conv" + std::to_string(b + 1) + "_" + std::to_string(k + 1)), rng);
      s.add_relu();
    }
    s.add_pool();
  }
  s.add_flatten();
  const std::size_t hidden = ceil_div(4096, scale);
  s.add_dense(hidden, join(prefix, "fc1"), rng);
  s.add_relu();
  s.add_dense(hidden, join(prefix, "fc2"), rng);
  s.add_relu();
  return s;
}

Stream build_stream(const StreamSpec& spec, ImageShape input, Rng& rng, const std::string& prefix) {
  switch (spec.arch) {
    case StreamArch::SimpleCnn: return build_simple_cnn_stream(input, rng, prefix);
    case StreamArch::Vgg16Scaled: return build_scaled_vgg16_stream(spec.scale, input, rng, prefix);
  }
  throw ValidationError("unknown stream architecture");
}

// ---- Standalone ---------------------------------------------------------

Tensor normalize_pixels(const Tensor& raw) {
  Tensor out(raw.shape());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / 255.0f;
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  Tensor probs(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = logits.data().data() + r * classes;
    const double zmax = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) sum += std::exp(z[k] - zmax);
    for (std::size_t k = 0; k < classes; ++k) {
      probs[r * classes + k] = static_cast<float>(std::exp(z[k] - zmax) / sum);
    }
  }
  return probs;
}

StandaloneModel::StandaloneModel(Stream stream, std::size_t num_classes, Rng& rng)
    : stream_(std::move(stream)),
      head_weight_(he_uniform({stream_.feature_dim(), num_classes}, stream_.feature_dim(), rng)),
      head_bias_({num_classes}) {}

std::size_t StandaloneModel::param_count() const {
  return stream_.param_count() + head_weight_.size() + head_bias_.size();
}

Tensor StandaloneModel::predict(const Tensor& batch) {
  Tape tape;
  Var features = stream_.features(tape, tape.constant(normalize_pixels(batch)));
  return softmax_rows(tape.value(classifier_logits(tape, features, head_weight_, head_bias_)));
}

StandaloneModel build_simple_cnn(ImageShape input, std::size_t num_classes, std::uint64_t seed) {
  Rng rng(seed);
  Stream s = build_simple_cnn_stream(input, rng);
  return StandaloneModel(std::move(s), num_classes, rng);
}

StandaloneModel build_scaled_vgg16(std::size_t scale, ImageShape input, std::size_t num_classes, std::uint64_t seed) {
  Rng rng(seed);
  Stream s = build_scaled_vgg16_stream(scale, input, rng);
  return StandaloneModel(std::move(s), num_classes, rng);
}

// ---- StreamingNetwork ---------------------------------------------------

std::size_t StreamingNetwork::feature_dim() const {
  std::size_t total = 0;
  for (const auto& s : streams_) total += s.feature_dim();
  return total;
}

std::size_t StreamingNetwork::param_count() const {
  std::size_t total = classifier_weight_.size() + classifier_bias_.size();
  for (const auto& s : streams_) total += s.param_count();
  return total;
}

std::vector<Tensor*> StreamingNetwork::parameters() {
  std::vector<Tensor*> out;
  for (auto& s : streams_) {
    for (auto& p : s.params()) out.push_back(&p.tensor);
  }
  out.push_back(&classifier_weight_);
  out.push_back(&classifier_bias_);
  return out;
}

std::vector<NamedTensor> StreamingNetwork::named_parameters() const {
  std::vector<NamedTensor> out;
  for (const auto& s : streams_) {
    for (const auto& p : s.params()) out.push_back({p.name, Tensor(p.tensor.shape(), p.tensor.storage())});
  }
  out.push_back({"classifier.weight", Tensor(classifier_weight_.shape(), classifier_weight_.storage())});
  out.push_back({"classifier.bias", Tensor(classifier_bias_.shape(), classifier_bias_.storage())});
  return out;
}

void StreamingNetwork::load_parameters(const std::vector<NamedTensor>& values) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& v : values) by_name[v.name] = &v.tensor;
  auto assign = [&](const std::string& name, Tensor& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint lacks parameter " + name);
    if (it->second->shape() != dst.shape()) {
      throw ShapeError("parameter " + name + " has shape " + to_string(it->second->shape()) + ", model expects " +
                       to_string(dst.shape()));
    }
    std::copy(it->second->data().begin(), it->second->data().end(), dst.data().begin());
    by_name.erase(it);
  };
  for (auto& s : streams_) {
    for (auto& p : s.params()) assign(p.name, p.tensor);
  }
  assign("classifier.weight", classifier_weight_);
  assign("classifier.bias", classifier_bias_);
  if (!by_name.empty()) throw ValidationError("checkpoint has unknown parameter " + by_name.begin()->first);
}

void StreamingNetwork::set_requires_grad(bool on) {
  for (Tensor* p : parameters()) p->set_requires_grad(on);
}

void StreamingNetwork::zero_grad() {
  for (Tensor* p : parameters()) p->zero_grad();
}

StreamingNetwork::Forward StreamingNetwork::forward(Tape& tape, const Tensor& batch) {
  const Shape expected = spec_.input.batch_shape(batch.rank() == 4 ? batch.dim(0) : 0);
  if (batch.shape() != expected) {
    throw ShapeError("network expects a batch of shape N×" + std::to_string(spec_.input.channels) + "×" +
                     std::to_string(spec_.input.height) + "×" + std::to_string(spec_.input.width) + ", got " +
                     to_string(batch.shape()));
  }
  SliceStack stack = decompose(batch, spec_.slices);
  Forward out;
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    Var slice = tape.constant(normalize_pixels(stack.slices[i]));
    out.stream_features.push_back(streams_[i].features(tape, slice));
  }
  out.joint_features = out.stream_features.size() == 1 ? out.stream_features[0] : tape.concat(out.stream_features);
  out.logits = classifier_logits(tape, out.joint_features, classifier_weight_, classifier_bias_);
  return out;
}

Tensor StreamingNetwork::predict(const Tensor& batch) {
  Tape tape;
  return softmax_rows(tape.value(forward(tape, batch).logits));
}

StreamingNetwork build_streaming_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  StreamingNetwork net(spec);
  for (std::size_t i = 0; i < spec.streams.size(); ++i) {
    Rng rng(mix_seed(seed, i));
    net.streams_.push_back(build_stream(spec.streams[i], spec.input, rng, "stream" + std::to_string(i)));
  }
  Rng rng(mix_seed(seed, 0xc1a55ULL));
  const std::size_t d = net.feature_dim();
  net.classifier_weight_ = he_uniform({d, spec.num_classes}, d, rng);
  net.classifier_bias_ = Tensor({spec.num_classes});
  return net;
}

}  // namespace stnet
