#include <bit>
#include <cstring>
#include <regex>
#include <sstream>

#include "stnet/data_io.hpp"
#include "stnet/errors.hpp"

namespace stnet {

namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kPreamble = 10;  // magic + version + header length
constexpr std::size_t kAlignment = 64;

std::uint64_t load_le(const std::uint8_t* p, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void store_le(std::uint8_t* p, std::uint64_t v, std::size_t bytes) {
  for (std::size_t i = 0; i < bytes; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

NpyDtype parse_descr(const std::string& descr) {
  if (descr == "|u1" || descr == "<u1") return NpyDtype::U8;
  if (descr == "<f4") return NpyDtype::F32;
  if (descr == "<f8") return NpyDtype::F64;
  if (descr == "<i8") return NpyDtype::I64;
  throw ParseError(ParseErrc::UnsupportedDtype, "descr '" + descr + "'");
}

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \t");
    const std::string digits = item.substr(first, last - first + 1);
    if (digits.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(ParseErrc::NotNpy, "malformed shape entry '" + digits + "'");
    }
    shape.push_back(static_cast<std::size_t>(std::stoull(digits)));
  }
  return shape;
}

}  // namespace

std::string_view npy_descr(NpyDtype dtype) {
  switch (dtype) {
    case NpyDtype::U8: return "|u1";
    case NpyDtype::F32: return "<f4";
    case NpyDtype::F64: return "<f8";
    case NpyDtype::I64: return "<i8";
  }
  return "?";
}

std::size_t npy_item_size(NpyDtype dtype) {
  switch (dtype) {
    case NpyDtype::U8: return 1;
    case NpyDtype::F32: return 4;
    case NpyDtype::F64: return 8;
    case NpyDtype::I64: return 8;
  }
  return 0;
}

double NpyArray::at(std::size_t i) const {
  const std::uint8_t* p = payload.data() + i * npy_item_size(dtype);
  switch (dtype) {
    case NpyDtype::U8: return p[0];
    case NpyDtype::F32: return std::bit_cast<float>(static_cast<std::uint32_t>(load_le(p, 4)));
    case NpyDtype::F64: return std::bit_cast<double>(load_le(p, 8));
    case NpyDtype::I64: return static_cast<double>(static_cast<std::int64_t>(load_le(p, 8)));
  }
  return 0.0;
}

Tensor NpyArray::to_tensor() const {
  Tensor t(shape);
  auto out = t.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(at(i));
  return t;
}

NpyArray parse_npy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw ParseError(ParseErrc::NotNpy, "missing \\x93NUMPY magic");
  }
  if (bytes.size() < kPreamble) throw ParseError(ParseErrc::Truncated, "npy preamble cut short");
  if (bytes[6] != 1 || bytes[7] != 0) {
    throw ParseError(ParseErrc::UnsupportedLayout, "npy version " + std::to_string(bytes[6]) + "." +
                                                       std::to_string(bytes[7]) + " (only 1.0 is read)");
  }
  const std::size_t header_len = load_le(bytes.data() + 8, 2);
  if (bytes.size() < kPreamble + header_len) throw ParseError(ParseErrc::Truncated, "npy header cut short");
  const std::string header(reinterpret_cast<const char*>(bytes.data() + kPreamble), header_len);

  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  std::smatch m;
  if (!std::regex_search(header, m, descr_re)) throw ParseError(ParseErrc::NotNpy, "header lacks 'descr'");
  const std::string descr = m[1];
  if (!std::regex_search(header, m, order_re)) throw ParseError(ParseErrc::NotNpy, "header lacks 'fortran_order'");
  const bool fortran = m[1] == "True";
  if (!std::regex_search(header, m, shape_re)) throw ParseError(ParseErrc::NotNpy, "header lacks 'shape'");
  const std::string shape_text = m[1];

  if (fortran) throw ParseError(ParseErrc::UnsupportedLayout, "fortran_order arrays are not supported");
  NpyArray array;
  array.dtype = parse_descr(descr);
  array.shape = parse_shape(shape_text);
  const std::size_t expected = array.count() * npy_item_size(array.dtype);
  const std::size_t available = bytes.size() - kPreamble - header_len;
  if (available != expected) {
    throw ParseError(ParseErrc::Truncated, "payload holds " + std::to_string(available) + " bytes, shape " +
                                               to_string(array.shape) + " needs " + std::to_string(expected));
  }
  array.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(kPreamble + header_len), bytes.end());
  return array;
}

std::vector<std::uint8_t> write_npy(const NpyArray& array) {
  if (array.payload.size() != array.count() * npy_item_size(array.dtype)) {
    throw ShapeError("npy payload size does not match shape " + to_string(array.shape));
  }
  std::string dict = "{'descr': '" + std::string(npy_descr(array.dtype)) + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    dict += std::to_string(array.shape[i]);
    if (array.shape.size() == 1 || i + 1 < array.shape.size()) dict += ",";
    if (i + 1 < array.shape.size()) dict += " ";
  }
  dict += "), }";
  const std::size_t unpadded = kPreamble + dict.size() + 1;
  const std::size_t padding = (kAlignment - unpadded % kAlignment) % kAlignment;
  dict.append(padding, ' ');
  dict += '\n';

  std::vector<std::uint8_t> out(kPreamble);
  std::memcpy(out.data(), kMagic, 6);
  out[6] = 1;
  out[7] = 0;
  store_le(out.data() + 8, dict.size(), 2);
  out.insert(out.end(), dict.begin(), dict.end());
  out.insert(out.end(), array.payload.begin(), array.payload.end());
  return out;
}

NpyArray make_npy_u8(Shape shape, std::span<const std::uint8_t> values) {
  NpyArray a;
  a.shape = std::move(shape);
  a.dtype = NpyDtype::U8;
  a.payload.assign(values.begin(), values.end());
  if (a.payload.size() != a.count()) throw ShapeError("value count does not match shape " + to_string(a.shape));
  return a;
}

NpyArray make_npy_f32(Shape shape, std::span<const float> values) {
  NpyArray a;
  a.shape = std::move(shape);
  a.dtype = NpyDtype::F32;
  if (values.size() != a.count()) throw ShapeError("value count does not match shape " + to_string(a.shape));
  a.payload.resize(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) store_le(a.payload.data() + 4 * i, std::bit_cast<std::uint32_t>(values[i]), 4);
  return a;
}

Dataset dataset_from_npy(const NpyArray& images, const NpyArray& labels, bool nhwc, std::size_t num_classes) {
  if (images.shape.size() != 4) throw ShapeError("image array must be rank 4, got " + to_string(images.shape));
  if (labels.shape.size() != 1 || labels.shape[0] != images.shape[0]) {
    throw ShapeError("label array " + to_string(labels.shape) + " does not match images " + to_string(images.shape));
  }
  const std::size_t n = images.shape[0];
  const std::size_t c = nhwc ? images.shape[3] : images.shape[1];
  const std::size_t h = nhwc ? images.shape[1] : images.shape[2];
  const std::size_t w = nhwc ? images.shape[2] : images.shape[3];
  Dataset data;
  data.images = Tensor({n, c, h, w});
  auto out = data.images.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t src = nhwc ? ((i * h + y) * w + x) * c + ch : ((i * c + ch) * h + y) * w + x;
          out[((i * c + ch) * h + y) * w + x] = static_cast<float>(images.at(src));
        }
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = labels.at(i);
    if (v < 0 || v >= static_cast<double>(num_classes) || v != static_cast<double>(static_cast<long long>(v))) {
      throw ValidationError("label " + std::to_string(v) + " at index " + std::to_string(i) + " is not a class index");
    }
    data.labels[i] = static_cast<int>(v);
  }
  if (num_classes == 10) {
    data.class_names = cifar10_class_names();
  } else {
    for (std::size_t k = 0; k < num_classes; ++k) data.class_names.push_back("class" + std::to_string(k));
  }
  return data;
}

}  // namespace stnet
