#include "stnet/dataset.hpp"

#include <algorithm>

#include "stnet/errors.hpp"

namespace stnet {

ImageShape Dataset::image_shape() const {
  if (images.rank() != 4) throw ShapeError("dataset images must be N×C×H×W, got " + to_string(images.shape()));
  return {images.dim(1), images.dim(2), images.dim(3)};
}

void Dataset::validate() const {
  if (images.rank() != 4) throw ShapeError("dataset images must be N×C×H×W, got " + to_string(images.shape()));
  if (images.dim(0) != labels.size()) {
    throw ValidationError("dataset has " + std::to_string(images.dim(0)) + " images but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_names.size()) {
      throw ValidationError("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                            " outside [0, " + std::to_string(class_names.size()) + ")");
    }
  }
}

Tensor Dataset::gather_images(std::span<const std::size_t> indices) const {
  const ImageShape s = image_shape();
  const std::size_t stride = s.channels * s.height * s.width;
  Tensor out(s.batch_shape(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw ValidationError("sample index " + std::to_string(indices[i]) + " out of range");
    std::copy_n(images.data().begin() + static_cast<std::ptrdiff_t>(indices[i] * stride), stride,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.images = gather_images(indices);
  out.class_names = class_names;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  return out;
}

Tensor Dataset::image(std::size_t n) const {
  const ImageShape s = image_shape();
  const std::size_t idx[1] = {n};
  return gather_images(idx).reshaped({s.channels, s.height, s.width});
}

}  // namespace stnet
