#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stnet/rng.hpp"
#include "stnet/tape.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

/// A function under test, expressed twice: once on the float tape (analytic
/// gradient) and once as a plain double-precision forward (numeric gradient).
struct GradCheckTarget {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<Var(Tape&, std::span<const Var>)> build;
  std::function<std::vector<double>(const std::vector<std::vector<double>>&)> reference;
  /// Optional: rewrites the analytic gradient of input `index` before comparison.
  std::function<void(std::size_t index, std::span<float> grad)> tamper;
};

/// Scalarizes the output with seeded random coefficients, then compares the
/// tape gradient of every input element against central differences
/// (f(x+eps) - f(x-eps)) / 2eps evaluated in double. Returns
/// max |a - n| / max(|a|, |n|, 1e-8).
double gradient_check(const GradCheckTarget& target, double eps, std::uint64_t seed);

GradCheckTarget conv2d_target(std::size_t batch, std::size_t channels, std::size_t height,
                              std::size_t width, std::size_t filters, std::size_t kernel, Rng& rng);
/// Values are distinct and at least `gap` apart so no window has a near-tie.
GradCheckTarget maxpool2_target(std::size_t batch, std::size_t channels, std::size_t height,
                                std::size_t width, double gap, Rng& rng);
/// Values satisfy |x| >= margin.
GradCheckTarget relu_target(const Shape& shape, double margin, Rng& rng);
GradCheckTarget dense_target(std::size_t rows, std::size_t in_features, std::size_t out_features, Rng& rng);
GradCheckTarget softmax_cross_entropy_target(std::size_t rows, std::size_t classes, Rng& rng);
/// relu(x·0 - 1): identically zero, so every gradient is exactly zero.
GradCheckTarget constant_relu_target(std::size_t rows, std::size_t in_features, std::size_t out_features,
                                     Rng& rng);

struct GradCheckResult {
  std::string primitive;
  std::string shape;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Every primitive at `cases_per_primitive` random shapes, eps = 1e-3,
/// threshold 1e-3.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, std::size_t cases_per_primitive = 5);

}  // namespace stnet
