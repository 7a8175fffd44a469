#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stnet/dataset.hpp"
#include "stnet/rng.hpp"
#include "stnet/tensor.hpp"

namespace stnet::test {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.storage()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Owning copy; safe as a range-for initializer over a temporary tensor.
inline std::vector<float> values(const Tensor& t) { return t.storage(); }

// Integer-valued pixels in [0, 255].
inline Tensor random_image(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.storage()) v = static_cast<float>(rng.below(256));
  return t;
}

// Direct same-padded convolution, accumulated in double.
inline std::vector<double> conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t F = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const long ph = static_cast<long>(KH / 2), pw = static_cast<long>(KW / 2);
  std::vector<double> out(N * F * H * W);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx) {
          double acc = b[f];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < KH; ++i)
              for (std::size_t j = 0; j < KW; ++j) {
                const long sy = static_cast<long>(y + i) - ph, sx = static_cast<long>(xx + j) - pw;
                if (sy < 0 || sx < 0 || sy >= static_cast<long>(H) || sx >= static_cast<long>(W)) continue;
                acc += static_cast<double>(x.at(n, c, sy, sx)) * w.at(f, c, i, j);
              }
          out[((n * F + f) * H + y) * W + xx] = acc;
        }
  return out;
}

inline std::vector<float> maxpool_oracle(const Tensor& x) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t OH = H / 2, OW = W / 2;
  std::vector<float> out;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t xx = 0; xx < OW; ++xx) {
          float m = x.at(n, c, 2 * y, 2 * xx);
          for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) m = std::max(m, x.at(n, c, 2 * y + i, 2 * xx + j));
          out.push_back(m);
        }
  return out;
}

// Class c paints a bright square into quadrant c over a noisy dark background.
inline Dataset quadrant_dataset(std::size_t per_class, std::size_t classes, std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = per_class * classes, half = side / 2;
  Dataset d;
  d.images = Tensor({n, 3, side, side});
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % classes);
    d.labels.push_back(label);
    const std::size_t oy = (label / 2) * half, ox = (label % 2) * half;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) {
          const bool inside = y >= oy && y < oy + half && x >= ox && x < ox + half;
          d.images.at(i, c, y, x) = static_cast<float>(inside ? 180 + rng.below(76) : rng.below(90));
        }
  }
  for (std::size_t c = 0; c < classes; ++c) d.class_names.push_back("c" + std::to_string(c));
  return d;
}

// Two classes of oriented stripes (horizontal vs vertical) with random phase,
// period, contrast and pixel noise.
inline Dataset stripes_dataset(std::size_t n, std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.images = Tensor({n, 3, side, side});
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    d.labels.push_back(label);
    const double period = 4.0 + rng.uniform(0.0, 6.0), phase = rng.uniform(0.0, 6.283185307179586);
    const double base = rng.uniform(40.0, 140.0), amp = rng.uniform(30.0, 90.0);
    const double tint[3] = {rng.uniform(0.7, 1.0), rng.uniform(0.7, 1.0), rng.uniform(0.7, 1.0)};
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) {
        const double t = static_cast<double>(label == 0 ? y : x);
        const double s = base + amp * std::sin(6.283185307179586 * t / period + phase);
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = s * tint[c] + rng.uniform(-25.0, 25.0);
          d.images.at(i, c, y, x) = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
        }
      }
  }
  d.class_names = {"horizontal", "vertical"};
  return d;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("stnet_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace stnet::test
