#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stnet/models.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

/// Labeled images: N×C×H×W floats in [0,255].
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t num_classes() const { return class_names.size(); }
  ImageShape image_shape() const;

  /// Checks N == labels, label < K and a 4-D image tensor.
  void validate() const;
  /// Images and labels at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
  Tensor gather_images(std::span<const std::size_t> indices) const;
  /// Image n as C×H×W.
  Tensor image(std::size_t n) const;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace stnet
