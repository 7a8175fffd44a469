#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Raw forward/backward kernels for the layer primitives. Templated on the
// scalar type: the autograd tape runs the float instantiation, the gradient
// checker re-runs the forward kernels in double for its finite differences.
// Backward kernels accumulate into their outputs; pass an empty span to skip
// a gradient.
namespace stnet::kernels {

struct ConvGeometry {
  std::size_t batch = 0, in_channels = 0, height = 0, width = 0;
  std::size_t filters = 0, kernel_h = 0, kernel_w = 0;

  std::size_t input_size() const { return batch * in_channels * height * width; }
  std::size_t weight_size() const { return filters * in_channels * kernel_h * kernel_w; }
  std::size_t output_size() const { return batch * filters * height * width; }
};

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output);

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input,
                     std::span<T> grad_weight, std::span<T> grad_bias);

struct PoolGeometry {
  std::size_t batch = 0, channels = 0, height = 0, width = 0;

  std::size_t out_height() const { return height / 2; }
  std::size_t out_width() const { return width / 2; }
  std::size_t output_size() const { return batch * channels * out_height() * out_width(); }
};

/// `argmax` receives, per output element, the flat input index of the window
/// maximum (first in row-major window order on ties).
template <typename T>
void maxpool2_forward(const PoolGeometry& g, std::span<const T> input, std::span<T> output,
                      std::span<std::uint32_t> argmax);

template <typename T>
void maxpool2_backward(std::span<const std::uint32_t> argmax, std::span<const T> grad_output,
                       std::span<T> grad_input);

template <typename T>
void relu_forward(std::span<const T> input, std::span<T> output);

template <typename T>
void relu_backward(std::span<const T> input, std::span<const T> grad_output, std::span<T> grad_input);

struct DenseGeometry {
  std::size_t rows = 0, in_features = 0, out_features = 0;
};

template <typename T>
void dense_forward(const DenseGeometry& g, std::span<const T> input, std::span<const T> weight,
                   std::span<const T> bias, std::span<T> output);

template <typename T>
void dense_backward(const DenseGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> grad_output, std::span<T> grad_input,
                    std::span<T> grad_weight, std::span<T> grad_bias);

/// Row-wise stabilized softmax into `probs`; returns the mean negative
/// log-likelihood of `labels`, accumulated in double. Labels are assumed valid.
template <typename T>
double softmax_cross_entropy_forward(std::size_t rows, std::size_t classes, std::span<const T> logits,
                                     std::span<const int> labels, std::span<T> probs);

}  // namespace stnet::kernels
