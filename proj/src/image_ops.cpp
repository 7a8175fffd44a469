#include <algorithm>
#include <cmath>

#include "stnet/data_io.hpp"
#include "stnet/errors.hpp"
#include "stnet/rng.hpp"

namespace stnet {

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

// Half-pixel centers: src = (dst + 0.5)·in/out - 0.5, clamped to [0, in-1].
std::vector<Tap> taps(std::size_t in, std::size_t out) {
  std::vector<Tap> t(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    double s = (static_cast<double>(d) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, in - 1);
    t[d] = {lo, hi, s - static_cast<double>(lo)};
  }
  return t;
}

}  // namespace

Tensor resize_bilinear(const Tensor& image, std::size_t out_height, std::size_t out_width) {
  if (out_height < 1 || out_width < 1) throw ValidationError("resize target must be at least 1×1");
  if (image.rank() != 3) throw ShapeError("resize expects a C×H×W image, got " + to_string(image.shape()));
  const std::size_t channels = image.dim(0), height = image.dim(1), width = image.dim(2);
  const auto rows = taps(height, out_height);
  const auto cols = taps(width, out_width);
  Tensor out({channels, out_height, out_width});
  for (std::size_t c = 0; c < channels; ++c) {
    const float* src = image.data().data() + c * height * width;
    for (std::size_t y = 0; y < out_height; ++y) {
      const Tap& ty = rows[y];
      for (std::size_t x = 0; x < out_width; ++x) {
        const Tap& tx = cols[x];
        const double top = src[ty.lo * width + tx.lo] * (1.0 - tx.frac) + src[ty.lo * width + tx.hi] * tx.frac;
        const double bottom = src[ty.hi * width + tx.lo] * (1.0 - tx.frac) + src[ty.hi * width + tx.hi] * tx.frac;
        out[(c * out_height + y) * out_width + x] = static_cast<float>(top * (1.0 - ty.frac) + bottom * ty.frac);
      }
    }
  }
  return out;
}

Dataset resize_dataset(const Dataset& data, std::size_t out_height, std::size_t out_width) {
  const ImageShape s = data.image_shape();
  Dataset out;
  out.labels = data.labels;
  out.class_names = data.class_names;
  out.images = Tensor({data.size(), s.channels, out_height, out_width});
  const std::size_t stride = s.channels * out_height * out_width;
  for (std::size_t n = 0; n < data.size(); ++n) {
    Tensor r = resize_bilinear(data.image(n), out_height, out_width);
    std::copy(r.data().begin(), r.data().end(), out.images.data().begin() + static_cast<std::ptrdiff_t>(n * stride));
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t total, std::size_t n_train,
                                                                           std::size_t n_test, std::uint64_t seed) {
  if (n_train + n_test > total) {
    throw ValidationError("split needs " + std::to_string(n_train + n_test) + " samples, dataset has " +
                          std::to_string(total));
  }
  Rng rng(seed);
  const auto order = permutation(total, rng);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  auto [train, test] = split_indices(data.size(), n_train, n_test, seed);
  return {data.subset(train), data.subset(test)};
}

}  // namespace stnet
