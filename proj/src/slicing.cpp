#include "stnet/slicing.hpp"

#include <cmath>
#include <string>

#include "stnet/errors.hpp"

namespace stnet {

SliceSpec SliceSpec::uniform(std::size_t n) {
  SliceSpec spec;
  spec.n = n;
  spec.weights.assign(n, 1.0f);
  spec.validate();
  return spec;
}

void SliceSpec::validate() const {
  if (n < 1) throw ValidationError("slice count must be >= 1");
  if (weights.size() != n) {
    throw ValidationError("slice spec has " + std::to_string(weights.size()) + " weights for n = " +
                          std::to_string(n));
  }
}

std::size_t band_of(double value, std::size_t n) {
  if (n < 1) throw ValidationError("band_of: n must be >= 1");
  if (!(value >= 0.0 && value <= 255.0)) {
    throw ValidationError("intensity " + std::to_string(value) + " outside [0, 255]");
  }
  const auto band = static_cast<std::size_t>(std::floor(value * static_cast<double>(n) / 256.0));
  return band < n ? band : n - 1;
}

SliceStack decompose(const Tensor& image, const SliceSpec& spec) {
  spec.validate();
  SliceStack stack;
  stack.source_shape = image.shape();
  stack.slices.assign(spec.n, Tensor(image.shape()));
  const auto src = image.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const float v = src[i];
    if (!(v >= 0.0f && v <= 255.0f)) {
      throw ValidationError("pixel " + std::to_string(i) + " has value " + std::to_string(v) +
                            " outside [0, 255]");
    }
    if (v == 0.0f) continue;
    stack.slices[band_of(v, spec.n)][i] = v;
  }
  return stack;
}

Tensor reconstruct(const SliceStack& stack, std::span<const float> weights) {
  if (weights.size() != stack.slices.size()) {
    throw ValidationError("reconstruct got " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(stack.slices.size()) + " slices");
  }
  Tensor out(stack.source_shape);
  for (std::size_t s = 0; s < stack.slices.size(); ++s) {
    const auto slice = stack.slices[s].data();
    if (slice.size() != out.size()) {
      throw ShapeError("slice " + std::to_string(s) + " has shape " + to_string(stack.slices[s].shape()) +
                       ", expected " + to_string(stack.source_shape));
    }
    for (std::size_t i = 0; i < slice.size(); ++i) out[i] += weights[s] * slice[i];
  }
  return out;
}

}  // namespace stnet
