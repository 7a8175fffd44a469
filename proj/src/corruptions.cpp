#include "stnet/corruptions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "stnet/errors.hpp"
#include "stnet/rng.hpp"

namespace stnet {

namespace {

constexpr std::array<std::pair<CorruptionKind, std::string_view>, 10> kNames{{
    {CorruptionKind::ZeroNoise, "zero_noise"},
    {CorruptionKind::Gaussian, "gaussian"},
    {CorruptionKind::Speckle, "speckle"},
    {CorruptionKind::Shot, "shot"},
    {CorruptionKind::Impulse, "impulse"},
    {CorruptionKind::Brightness, "brightness"},
    {CorruptionKind::Contrast, "contrast"},
    {CorruptionKind::Saturate, "saturate"},
    {CorruptionKind::Pixelate, "pixelate"},
    {CorruptionKind::Gamma, "gamma"},
}};

float clip255(double v) { return static_cast<float>(std::clamp(v, 0.0, 255.0)); }

void require_image(const Tensor& image, const char* op) {
  if (image.rank() != 3) {
    throw ShapeError(std::string(op) + " expects a C×H×W image, got " + to_string(image.shape()));
  }
}

void require_fraction(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

}  // namespace

std::string_view to_string(CorruptionKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<CorruptionKind> parse_corruption_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string_view parameter_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::ZeroNoise:
    case CorruptionKind::Impulse:
      return "p";
    case CorruptionKind::Gaussian:
    case CorruptionKind::Speckle:
    case CorruptionKind::Shot:
      return "sigma";
    case CorruptionKind::Brightness:
    case CorruptionKind::Contrast:
    case CorruptionKind::Saturate:
      return "amount";
    case CorruptionKind::Pixelate:
      return "k";
    case CorruptionKind::Gamma:
      return "gamma";
  }
  return "value";
}

bool CorruptionSpec::stochastic() const {
  switch (kind) {
    case CorruptionKind::ZeroNoise:
    case CorruptionKind::Gaussian:
    case CorruptionKind::Speckle:
    case CorruptionKind::Shot:
    case CorruptionKind::Impulse:
      return true;
    default:
      return false;
  }
}

void CorruptionSpec::validate() const {
  const std::string name(to_string(kind));
  switch (kind) {
    case CorruptionKind::ZeroNoise:
    case CorruptionKind::Impulse:
      require_fraction(value, (name + " p").c_str());
      break;
    case CorruptionKind::Gaussian:
    case CorruptionKind::Speckle:
    case CorruptionKind::Shot:
      if (!(value >= 0.0)) throw ValidationError(name + " sigma must be >= 0");
      break;
    case CorruptionKind::Contrast:
    case CorruptionKind::Saturate:
      if (!(value >= 0.0)) throw ValidationError(name + " amount must be >= 0");
      break;
    case CorruptionKind::Brightness:
      if (!std::isfinite(value)) throw ValidationError("brightness amount must be finite");
      break;
    case CorruptionKind::Pixelate:
      if (!(value >= 1.0) || value != std::floor(value)) {
        throw ValidationError("pixelate k must be an integer >= 1");
      }
      break;
    case CorruptionKind::Gamma:
      if (!(value > 0.0)) throw ValidationError("gamma must be > 0");
      break;
  }
}

Tensor zero_noise(const Tensor& image, double p, std::uint64_t seed) {
  require_image(image, "zero_noise");
  require_fraction(p, "zero_noise p");
  const std::size_t channels = image.dim(0);
  const std::size_t plane = image.dim(1) * image.dim(2);
  const auto count = static_cast<std::size_t>(std::floor(p * static_cast<double>(plane)));
  Rng rng(seed);
  Tensor out = image;
  for (std::size_t pos : sample_without_replacement(plane, count, rng)) {
    for (std::size_t c = 0; c < channels; ++c) out[c * plane + pos] = 0.0f;
  }
  return out;
}

double gamma_lowlight(double value, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be > 0");
  return std::pow(value / 255.0, gamma) * 255.0;
}

Tensor gamma_lowlight(const Tensor& image, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be > 0");
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = static_cast<float>(gamma_lowlight(image[i], gamma));
  return out;
}

Tensor statistical_noise(const Tensor& image, CorruptionKind kind, double strength, std::uint64_t seed) {
  if (!(strength >= 0.0)) throw ValidationError("noise strength must be >= 0");
  Rng rng(seed);
  Tensor out = image;
  auto data = out.data();
  switch (kind) {
    case CorruptionKind::Gaussian:
      if (strength == 0.0) break;
      for (float& v : data) v = clip255(v + 255.0 * strength * rng.normal());
      break;
    case CorruptionKind::Speckle:
      if (strength == 0.0) break;
      for (float& v : data) v = clip255(v * (1.0 + strength * rng.normal()));
      break;
    case CorruptionKind::Shot: {
      if (strength == 0.0) break;
      const double lambda = 1.0 / (strength * strength);
      for (float& v : data) {
        const double mean = static_cast<double>(v) / 255.0 * lambda;
        double draw = 0.0;
        if (mean > 0.0) {
          std::poisson_distribution<long long> poisson(mean);
          draw = static_cast<double>(poisson(rng));
        }
        v = clip255(255.0 * draw / lambda);
      }
      break;
    }
    case CorruptionKind::Impulse: {
      require_fraction(strength, "impulse p");
      const auto count = static_cast<std::size_t>(std::floor(strength * static_cast<double>(data.size())));
      for (std::size_t idx : sample_without_replacement(data.size(), count, rng)) {
        data[idx] = (rng() >> 63) ? 255.0f : 0.0f;
      }
      break;
    }
    default:
      throw ValidationError("statistical_noise does not handle kind " + std::string(to_string(kind)));
  }
  return out;
}

Tensor photometric(const Tensor& image, CorruptionKind kind, double amount) {
  Tensor out = image;
  auto data = out.data();
  switch (kind) {
    case CorruptionKind::Brightness:
      for (float& v : data) v = clip255(v + 255.0 * amount);
      break;
    case CorruptionKind::Contrast: {
      if (!(amount >= 0.0)) throw ValidationError("contrast amount must be >= 0");
      if (data.empty()) break;
      double mean = 0.0;
      for (float v : data) mean += v;
      mean /= static_cast<double>(data.size());
      for (float& v : data) v = clip255(mean + (v - mean) * amount);
      break;
    }
    case CorruptionKind::Saturate: {
      if (!(amount >= 0.0)) throw ValidationError("saturate amount must be >= 0");
      require_image(image, "saturate");
      const std::size_t channels = image.dim(0);
      const std::size_t plane = image.dim(1) * image.dim(2);
      for (std::size_t p = 0; p < plane; ++p) {
        double gray = 0.0;
        for (std::size_t c = 0; c < channels; ++c) gray += data[c * plane + p];
        gray /= static_cast<double>(channels);
        for (std::size_t c = 0; c < channels; ++c) {
          float& v = data[c * plane + p];
          v = clip255(gray + (v - gray) * amount);
        }
      }
      break;
    }
    default:
      throw ValidationError("photometric does not handle kind " + std::string(to_string(kind)));
  }
  return out;
}

Tensor pixelate(const Tensor& image, std::size_t block) {
  if (block < 1) throw ValidationError("pixelate block size must be >= 1");
  require_image(image, "pixelate");
  const std::size_t channels = image.dim(0), height = image.dim(1), width = image.dim(2);
  Tensor out(image.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t by = 0; by < height; by += block) {
      const std::size_t ey = std::min(height, by + block);
      for (std::size_t bx = 0; bx < width; bx += block) {
        const std::size_t ex = std::min(width, bx + block);
        double acc = 0.0;
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) acc += image[(c * height + y) * width + x];
        const auto mean = static_cast<float>(acc / static_cast<double>((ey - by) * (ex - bx)));
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) out[(c * height + y) * width + x] = mean;
      }
    }
  }
  return out;
}

Tensor apply_corruption(const Tensor& image, const CorruptionSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case CorruptionKind::ZeroNoise:
      return zero_noise(image, spec.value, seed);
    case CorruptionKind::Gaussian:
    case CorruptionKind::Speckle:
    case CorruptionKind::Shot:
    case CorruptionKind::Impulse:
      return statistical_noise(image, spec.kind, spec.value, seed);
    case CorruptionKind::Brightness:
    case CorruptionKind::Contrast:
    case CorruptionKind::Saturate:
      return photometric(image, spec.kind, spec.value);
    case CorruptionKind::Pixelate:
      return pixelate(image, static_cast<std::size_t>(spec.value));
    case CorruptionKind::Gamma:
      return gamma_lowlight(image, spec.value);
  }
  return image;
}

Tensor apply_pipeline(const Tensor& image, std::span<const CorruptionSpec> specs, std::uint64_t image_index) {
  Tensor out = image;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const std::uint64_t seed = mix_seed(mix_seed(specs[j].seed, image_index), j);
    out = apply_corruption(out, specs[j], seed);
  }
  return out;
}

void apply_pipeline_batch(Tensor& batch, std::span<const CorruptionSpec> specs, std::uint64_t first_index) {
  if (specs.empty()) return;
  if (batch.rank() != 4) throw ShapeError("expected an N×C×H×W batch, got " + to_string(batch.shape()));
  const Shape image_shape{batch.dim(1), batch.dim(2), batch.dim(3)};
  const std::size_t stride = numel(image_shape);
  for (std::size_t n = 0; n < batch.dim(0); ++n) {
    auto begin = batch.data().begin() + static_cast<std::ptrdiff_t>(n * stride);
    Tensor image(image_shape, std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(stride)));
    Tensor corrupted = apply_pipeline(image, specs, first_index + n);
    std::copy(corrupted.data().begin(), corrupted.data().end(), begin);
  }
}

}  // namespace stnet
