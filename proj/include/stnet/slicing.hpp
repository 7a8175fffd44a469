#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stnet/tensor.hpp"

namespace stnet {

/// Number of intensity bands and the per-band reconstruction weights.
struct SliceSpec {
  std::size_t n = 1;
  std::vector<float> weights{1.0f};

  /// n bands with unit weights.
  static SliceSpec uniform(std::size_t n);
  void validate() const;
};

/// One image per band; slice i keeps exactly the values whose band is i.
struct SliceStack {
  std::vector<Tensor> slices;
  Shape source_shape;
};

/// Equal-width band index over [0, 256): min(floor(v·n/256), n-1).
std::size_t band_of(double value, std::size_t n);

/// Splits `image` (any shape, values in [0,255]) into spec.n disjoint slices.
/// Band membership is decided per element, so channels are sliced independently.
SliceStack decompose(const Tensor& image, const SliceSpec& spec);

/// Σ weights[i] · slices[i].
Tensor reconstruct(const SliceStack& stack, std::span<const float> weights);

}  // namespace stnet
