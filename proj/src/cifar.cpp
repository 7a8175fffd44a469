#include <cmath>

#include "stnet/data_io.hpp"
#include "stnet/errors.hpp"

namespace stnet {

const std::vector<std::string>& cifar10_class_names() {
  static const std::vector<std::string> names{"airplane", "automobile", "bird",  "cat",  "deer",
                                              "dog",      "frog",       "horse", "ship", "truck"};
  return names;
}

Dataset parse_cifar10_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw ParseError(ParseErrc::Truncated, "CIFAR-10 batch of " + std::to_string(bytes.size()) +
                                               " bytes is not a multiple of " + std::to_string(kCifarRecordBytes));
  }
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  constexpr std::size_t pixels = kCifarRecordBytes - 1;
  Dataset data;
  data.class_names = cifar10_class_names();
  data.images = Tensor({records, 3, kCifarSide, kCifarSide});
  data.labels.resize(records);
  auto out = data.images.data();
  for (std::size_t r = 0; r < records; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] > 9) {
      throw ParseError(ParseErrc::CorruptRecord,
                       "record " + std::to_string(r) + " has label byte " + std::to_string(rec[0]));
    }
    data.labels[r] = rec[0];
    for (std::size_t i = 0; i < pixels; ++i) out[r * pixels + i] = static_cast<float>(rec[1 + i]);
  }
  return data;
}

std::vector<std::uint8_t> serialize_cifar10_binary(const Dataset& data) {
  data.validate();
  if (data.image_shape() != ImageShape{3, kCifarSide, kCifarSide}) {
    throw ShapeError("CIFAR-10 records need 3×32×32 images, got " + to_string(data.images.shape()));
  }
  constexpr std::size_t pixels = kCifarRecordBytes - 1;
  std::vector<std::uint8_t> bytes(data.size() * kCifarRecordBytes);
  const auto in = data.images.data();
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data.labels[r] > 9) throw ValidationError("CIFAR-10 labels must be in [0, 9]");
    std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    rec[0] = static_cast<std::uint8_t>(data.labels[r]);
    for (std::size_t i = 0; i < pixels; ++i) {
      const float v = in[r * pixels + i];
      if (!(v >= 0.0f && v <= 255.0f) || v != std::floor(v)) {
        throw ValidationError("CIFAR-10 pixel values must be integers in [0, 255]");
      }
      rec[1 + i] = static_cast<std::uint8_t>(v);
    }
  }
  return bytes;
}

Dataset load_cifar10_files(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw ValidationError("no CIFAR-10 batch files given");
  std::vector<std::uint8_t> all;
  for (const auto& path : paths) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() % kCifarRecordBytes != 0) {
      throw ParseError(ParseErrc::Truncated, path.string() + " has " + std::to_string(bytes.size()) +
                                                 " bytes, not a multiple of 3073");
    }
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  return parse_cifar10_binary(all);
}

}  // namespace stnet
