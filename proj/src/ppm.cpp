#include <algorithm>
#include <cctype>
#include <cmath>

#include "stnet/data_io.hpp"
#include "stnet/errors.hpp"

namespace stnet {

namespace fs = std::filesystem;

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal integer.
  std::size_t number(const char* what) {
    skip_space();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw ParseError(ParseErrc::UnsupportedImage, std::string("PPM ") + what + " too large");
    }
    if (digits == 0) {
      if (pos_ >= bytes_.size()) throw ParseError(ParseErrc::Truncated, std::string("PPM header ends before ") + what);
      throw ParseError(ParseErrc::UnsupportedImage, std::string("PPM ") + what + " is not a number");
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ParseError(ParseErrc::Truncated, "PPM header not terminated");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

std::uint8_t quantize(float v) {
  const double r = std::floor(static_cast<double>(v) + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (directories ? entry.is_directory() : entry.is_regular_file()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

}  // namespace

Tensor parse_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw ParseError(ParseErrc::UnsupportedImage, "not a binary P6 PPM");
  }
  HeaderReader header(bytes);
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (maxval != 255) throw ParseError(ParseErrc::UnsupportedImage, "PPM maxval " + std::to_string(maxval) + " != 255");
  if (width == 0 || height == 0) throw ParseError(ParseErrc::UnsupportedImage, "PPM with zero extent");
  const std::size_t start = header.raster_start();
  const std::size_t plane = width * height;
  if (bytes.size() - start < 3 * plane) {
    throw ParseError(ParseErrc::Truncated, "PPM raster holds " + std::to_string(bytes.size() - start) +
                                               " bytes, needs " + std::to_string(3 * plane));
  }
  Tensor image({3, height, width});
  const std::uint8_t* raster = bytes.data() + start;
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) image[c * plane + p] = raster[3 * p + c];
  return image;
}

std::vector<std::uint8_t> serialize_ppm(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("PPM output needs a 3×H×W image, got " + to_string(image.shape()));
  }
  const std::size_t height = image.dim(1), width = image.dim(2), plane = height * width;
  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.resize(header.size() + 3 * plane);
  std::uint8_t* raster = out.data() + header.size();
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) raster[3 * p + c] = quantize(image[c * plane + p]);
  return out;
}

Tensor read_ppm(const fs::path& path) {
  try {
    return parse_ppm(read_file_bytes(path));
  } catch (const ParseError& e) {
    throw ParseError(e.code(), path.string() + ": " + e.what());
  }
}

void write_ppm(const fs::path& path, const Tensor& image) { write_file_bytes(path, serialize_ppm(image)); }

Dataset load_ppm_dir(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError(root.string() + " is not a directory");
  const auto classes = sorted_entries(root, true);
  if (classes.empty()) throw ValidationError(root.string() + " has no class subdirectories");

  Dataset data;
  std::vector<Tensor> images;
  fs::path first_file;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const std::string name = classes[k].filename().string();
    const auto files = sorted_entries(classes[k], false);
    if (files.empty()) throw ValidationError("class directory '" + name + "' contains no images");
    data.class_names.push_back(name);
    for (const auto& file : files) {
      Tensor img = read_ppm(file);
      if (!images.empty() && img.shape() != images.front().shape()) {
        throw ParseError(ParseErrc::ShapeMismatch, file.string() + " is " + to_string(img.shape()) + " but " +
                                                       first_file.string() + " is " +
                                                       to_string(images.front().shape()));
      }
      if (images.empty()) first_file = file;
      images.push_back(std::move(img));
      data.labels.push_back(static_cast<int>(k));
    }
  }
  const Shape& s = images.front().shape();
  data.images = Tensor({images.size(), s[0], s[1], s[2]});
  const std::size_t stride = images.front().size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i].data().begin(), images[i].data().end(),
              data.images.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return data;
}

}  // namespace stnet
