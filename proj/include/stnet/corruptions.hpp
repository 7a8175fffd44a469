#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stnet/tensor.hpp"

namespace stnet {

enum class CorruptionKind {
  ZeroNoise,
  Gaussian,
  Speckle,
  Shot,
  Impulse,
  Brightness,
  Contrast,
  Saturate,
  Pixelate,
  Gamma,
};

std::string_view to_string(CorruptionKind kind);
std::optional<CorruptionKind> parse_corruption_kind(std::string_view name);
/// Name of the single scalar each kind takes: "p", "sigma", "amount", "k" or "gamma".
std::string_view parameter_name(CorruptionKind kind);

/// One corruption with its scalar parameter. `seed` only matters for the
/// stochastic kinds (zero_noise, gaussian, speckle, shot, impulse).
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::ZeroNoise;
  double value = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool stochastic() const;
};

// All functions take and return C×H×W images in [0, 255].

/// Zeroes exactly floor(p·H·W) distinct pixel positions in every channel.
Tensor zero_noise(const Tensor& image, double p, std::uint64_t seed);

/// (v/255)^gamma · 255, evaluated in double, kept unrounded.
/// Per-value map in double precision; the tensor overload stores its float rounding.
double gamma_lowlight(double value, double gamma);
Tensor gamma_lowlight(const Tensor& image, double gamma);

/// kind ∈ {Gaussian, Speckle, Shot, Impulse}.
Tensor statistical_noise(const Tensor& image, CorruptionKind kind, double strength, std::uint64_t seed);

/// kind ∈ {Brightness, Contrast, Saturate}.
Tensor photometric(const Tensor& image, CorruptionKind kind, double amount);

/// Replaces each k×k block (ragged at the far edges) by its per-channel mean.
Tensor pixelate(const Tensor& image, std::size_t block);

/// Applies one corruption with an explicit seed.
Tensor apply_corruption(const Tensor& image, const CorruptionSpec& spec, std::uint64_t seed);

/// Left fold over `specs`. Each stochastic member draws from a seed derived
/// from (its own seed, image_index, position), so a dataset corrupts the same
/// way regardless of processing order.
Tensor apply_pipeline(const Tensor& image, std::span<const CorruptionSpec> specs, std::uint64_t image_index = 0);

/// apply_pipeline on every image of an N×C×H×W batch; image i uses index first_index + i.
void apply_pipeline_batch(Tensor& batch, std::span<const CorruptionSpec> specs, std::uint64_t first_index = 0);

}  // namespace stnet
