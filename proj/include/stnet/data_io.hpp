#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stnet/dataset.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

// ---- CIFAR-10 binary ------------------------------------------------------
//
// A batch file is a sequence of 3073-byte records: one label byte (0-9), then
// the R, G and B planes of a 32×32 image, each 1024 bytes row-major.

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarSide = 32;

const std::vector<std::string>& cifar10_class_names();

Dataset parse_cifar10_binary(std::span<const std::uint8_t> bytes);
/// Inverse of parse_cifar10_binary; images must be 3×32×32 with integral values in [0,255].
std::vector<std::uint8_t> serialize_cifar10_binary(const Dataset& data);
/// Concatenation of several batch files, in argument order.
Dataset load_cifar10_files(std::span<const std::filesystem::path> paths);

// ---- NPY 1.0 ----------------------------------------------------------------

enum class NpyDtype { U8, F32, F64, I64 };

std::string_view npy_descr(NpyDtype dtype);
std::size_t npy_item_size(NpyDtype dtype);

/// A C-order array with its payload kept as raw little-endian bytes.
struct NpyArray {
  Shape shape;
  NpyDtype dtype = NpyDtype::U8;
  std::vector<std::uint8_t> payload;

  std::size_t count() const { return numel(shape); }
  /// Element i widened to double.
  double at(std::size_t i) const;
  /// All elements as float32, same shape.
  Tensor to_tensor() const;
};

NpyArray parse_npy(std::span<const std::uint8_t> bytes);
/// Version 1.0 file, header padded with spaces so the payload starts on a 64-byte boundary.
std::vector<std::uint8_t> write_npy(const NpyArray& array);

NpyArray make_npy_u8(Shape shape, std::span<const std::uint8_t> values);
NpyArray make_npy_f32(Shape shape, std::span<const float> values);

/// Images from an N×H×W×C (nhwc = true) or N×C×H×W array plus integer labels of length N.
Dataset dataset_from_npy(const NpyArray& images, const NpyArray& labels, bool nhwc, std::size_t num_classes);

// ---- PPM (P6, maxval 255) -------------------------------------------------

/// 3×H×W image with byte values.
Tensor parse_ppm(std::span<const std::uint8_t> bytes);
/// Quantizes (round half up, clamp to [0,255]) and emits "P6\n<w> <h>\n255\n" + raster.
std::vector<std::uint8_t> serialize_ppm(const Tensor& image);
Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& image);

/// One subdirectory per class, both classes and files in lexicographic order.
Dataset load_ppm_dir(const std::filesystem::path& root);

// ---- Geometry and splitting -------------------------------------------------

/// Half-pixel-center bilinear resampling of a C×H×W image.
Tensor resize_bilinear(const Tensor& image, std::size_t out_height, std::size_t out_width);
Dataset resize_dataset(const Dataset& data, std::size_t out_height, std::size_t out_width);

/// Seeded permutation; the first n_train indices go to train, the next n_test to test.
std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t n_train, std::size_t n_test, std::uint64_t seed);
/// The index sets split() would use.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t total, std::size_t n_train,
                                                                           std::size_t n_test, std::uint64_t seed);

}  // namespace stnet
