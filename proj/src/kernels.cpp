#include "stnet/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace stnet::kernels {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Unfolds one C×H×W image into a (C·kh·kw)×(H·W) patch matrix under same padding.
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* col) {
  const std::ptrdiff_t H = g.height, W = g.width;
  const std::ptrdiff_t ph = g.kernel_h / 2, pw = g.kernel_w / 2;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const T* plane = image + c * H * W;
    for (std::size_t i = 0; i < g.kernel_h; ++i) {
      for (std::size_t j = 0; j < g.kernel_w; ++j) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(i) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(j) - pw;
        const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y, col += W) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H || x_lo >= x_hi) {
            std::fill(col, col + W, T(0));
            continue;
          }
          std::fill(col, col + x_lo, T(0));
          std::copy(plane + sy * W + x_lo + dx, plane + sy * W + x_hi + dx, col + x_lo);
          std::fill(col + x_hi, col + W, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds a patch matrix back onto an image.
template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* image) {
  const std::ptrdiff_t H = g.height, W = g.width;
  const std::ptrdiff_t ph = g.kernel_h / 2, pw = g.kernel_w / 2;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* plane = image + c * H * W;
    for (std::size_t i = 0; i < g.kernel_h; ++i) {
      for (std::size_t j = 0; j < g.kernel_w; ++j) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(i) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(j) - pw;
        const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y, col += W) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          T* dst = plane + sy * W;
          for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) dst[x + dx] += col[x];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output) {
  const std::size_t hw = g.height * g.width;
  const std::size_t patch = g.in_channels * g.kernel_h * g.kernel_w;
  const bool pointwise = g.kernel_h == 1 && g.kernel_w == 1;
  std::vector<T> col(pointwise ? 0 : patch * hw);
  ConstMatrixMap<T> w(weight.data(), g.filters, patch);

  for (std::size_t n = 0; n < g.batch; ++n) {
    const T* image = input.data() + n * g.in_channels * hw;
    if (!pointwise) im2col(g, image, col.data());
    ConstMatrixMap<T> cols(pointwise ? image : col.data(), patch, hw);
    MatrixMap<T> out(output.data() + n * g.filters * hw, g.filters, hw);
    out.noalias() = w * cols;
    for (std::size_t f = 0; f < g.filters; ++f) out.row(f).array() += bias[f];
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input,
                     std::span<T> grad_weight, std::span<T> grad_bias) {
  const std::size_t hw = g.height * g.width;
  const std::size_t patch = g.in_channels * g.kernel_h * g.kernel_w;
  const bool pointwise = g.kernel_h == 1 && g.kernel_w == 1;
  std::vector<T> col(pointwise ? 0 : patch * hw);
  std::vector<T> dcol(pointwise || grad_input.empty() ? 0 : patch * hw);
  ConstMatrixMap<T> w(weight.data(), g.filters, patch);

  for (std::size_t n = 0; n < g.batch; ++n) {
    ConstMatrixMap<T> dout(grad_output.data() + n * g.filters * hw, g.filters, hw);
    if (!grad_bias.empty()) {
      for (std::size_t f = 0; f < g.filters; ++f) {
        double acc = 0.0;
        const T* row = dout.data() + f * hw;
        for (std::size_t k = 0; k < hw; ++k) acc += row[k];
        grad_bias[f] += static_cast<T>(acc);
      }
    }
    const T* image = input.data() + n * g.in_channels * hw;
    if (!grad_weight.empty()) {
      if (!pointwise) im2col(g, image, col.data());
      ConstMatrixMap<T> cols(pointwise ? image : col.data(), patch, hw);
      MatrixMap<T> dw(grad_weight.data(), g.filters, patch);
      dw.noalias() += dout * cols.transpose();
    }
    if (!grad_input.empty()) {
      T* dimage = grad_input.data() + n * g.in_channels * hw;
      if (pointwise) {
        MatrixMap<T> dx(dimage, patch, hw);
        dx.noalias() += w.transpose() * dout;
      } else {
        MatrixMap<T> dc(dcol.data(), patch, hw);
        dc.noalias() = w.transpose() * dout;
        col2im(g, dcol.data(), dimage);
      }
    }
  }
}

template <typename T>
void maxpool2_forward(const PoolGeometry& g, std::span<const T> input, std::span<T> output,
                      std::span<std::uint32_t> argmax) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < g.batch * g.channels; ++plane) {
    const std::size_t base = plane * g.height * g.width;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++o) {
        std::size_t best = base + (2 * y) * g.width + 2 * x;
        // Row-major window order; strict comparison keeps the first maximum.
        const std::size_t candidates[3] = {best + 1, best + g.width, best + g.width + 1};
        for (std::size_t idx : candidates) {
          if (input[idx] > input[best]) best = idx;
        }
        output[o] = input[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

template <typename T>
void maxpool2_backward(std::span<const std::uint32_t> argmax, std::span<const T> grad_output,
                       std::span<T> grad_input) {
  for (std::size_t o = 0; o < argmax.size(); ++o) grad_input[argmax[o]] += grad_output[o];
}

template <typename T>
void relu_forward(std::span<const T> input, std::span<T> output) {
  for (std::size_t i = 0; i < input.size(); ++i) output[i] = input[i] > T(0) ? input[i] : T(0);
}

template <typename T>
void relu_backward(std::span<const T> input, std::span<const T> grad_output, std::span<T> grad_input) {
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (input[i] > T(0)) grad_input[i] += grad_output[i];
  }
}

template <typename T>
void dense_forward(const DenseGeometry& g, std::span<const T> input, std::span<const T> weight,
                   std::span<const T> bias, std::span<T> output) {
  ConstMatrixMap<T> x(input.data(), g.rows, g.in_features);
  ConstMatrixMap<T> w(weight.data(), g.in_features, g.out_features);
  MatrixMap<T> out(output.data(), g.rows, g.out_features);
  out.noalias() = x * w;
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), g.out_features);
  out.rowwise() += b;
}

template <typename T>
void dense_backward(const DenseGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> grad_output, std::span<T> grad_input,
                    std::span<T> grad_weight, std::span<T> grad_bias) {
  ConstMatrixMap<T> dout(grad_output.data(), g.rows, g.out_features);
  if (!grad_weight.empty()) {
    ConstMatrixMap<T> x(input.data(), g.rows, g.in_features);
    MatrixMap<T> dw(grad_weight.data(), g.in_features, g.out_features);
    dw.noalias() += x.transpose() * dout;
  }
  if (!grad_bias.empty()) {
    for (std::size_t m = 0; m < g.out_features; ++m) {
      double acc = 0.0;
      for (std::size_t r = 0; r < g.rows; ++r) acc += dout(r, m);
      grad_bias[m] += static_cast<T>(acc);
    }
  }
  if (!grad_input.empty()) {
    ConstMatrixMap<T> w(weight.data(), g.in_features, g.out_features);
    MatrixMap<T> dx(grad_input.data(), g.rows, g.in_features);
    dx.noalias() += dout * w.transpose();
  }
}

template <typename T>
double softmax_cross_entropy_forward(std::size_t rows, std::size_t classes, std::span<const T> logits,
                                     std::span<const int> labels, std::span<T> probs) {
  double total = 0.0;
  std::vector<double> shifted(classes);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * classes;
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      shifted[k] = static_cast<double>(z[k]) - zmax;
      sum += std::exp(shifted[k]);
    }
    const double log_sum = std::log(sum);
    for (std::size_t k = 0; k < classes; ++k) {
      probs[r * classes + k] = static_cast<T>(std::exp(shifted[k] - log_sum));
    }
    total += log_sum - shifted[static_cast<std::size_t>(labels[r])];
  }
  return total / static_cast<double>(rows);
}

#define STNET_INSTANTIATE(T)                                                                        \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,      \
                                  std::span<const T>, std::span<T>);                                \
  template void conv2d_backward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,     \
                                   std::span<const T>, std::span<T>, std::span<T>, std::span<T>);   \
  template void maxpool2_forward<T>(const PoolGeometry&, std::span<const T>, std::span<T>,          \
                                    std::span<std::uint32_t>);                                      \
  template void maxpool2_backward<T>(std::span<const std::uint32_t>, std::span<const T>,            \
                                     std::span<T>);                                                 \
  template void relu_forward<T>(std::span<const T>, std::span<T>);                                  \
  template void relu_backward<T>(std::span<const T>, std::span<const T>, std::span<T>);             \
  template void dense_forward<T>(const DenseGeometry&, std::span<const T>, std::span<const T>,      \
                                 std::span<const T>, std::span<T>);                                 \
  template void dense_backward<T>(const DenseGeometry&, std::span<const T>, std::span<const T>,     \
                                  std::span<const T>, std::span<T>, std::span<T>, std::span<T>);    \
  template double softmax_cross_entropy_forward<T>(std::size_t, std::size_t, std::span<const T>,    \
                                                   std::span<const int>, std::span<T>);

STNET_INSTANTIATE(float)
STNET_INSTANTIATE(double)

#undef STNET_INSTANTIATE

}  // namespace stnet::kernels
