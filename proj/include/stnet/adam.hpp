#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stnet/tensor.hpp"

namespace stnet {

/// Defaults are the values the experiments use: lr 1e-4, beta1 0.99,
/// beta2 0.9, epsilon 1e-8. beta1/beta2 are taken as printed, not swapped.
struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.99;
  double beta2 = 0.9;
  double epsilon = 1e-8;

  void validate() const;
};

template <typename T>
struct AdamState {
  std::vector<T> m, v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update in place:
///   m = b1·m + (1-b1)·g,  v = b2·v + (1-b2)·g²,
///   θ -= lr · (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// A fresh (empty) state is sized on first use.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, const AdamConfig& config);

/// Adam over a fixed set of tensors, updating each from its Tensor::grad().
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor*> params, AdamConfig config);

  void step();
  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor*> params_;
  std::vector<AdamState<float>> states_;
  AdamConfig config_;
  std::uint64_t steps_ = 0;
};

}  // namespace stnet
