#include "stnet/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "stnet/dataset.hpp"
#include "stnet/errors.hpp"

namespace stnet {

namespace {

constexpr char kMagic[6] = {'S', 'T', 'N', 'E', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError(ParseErrc::Truncated, "checkpoint ends mid-record");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(std::span<const NamedTensor> tensors) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 6);
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.tensor.rank()));
    for (std::size_t d : t.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<NamedTensor> parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw ParseError(ParseErrc::BadCheckpoint, "missing STNET1 magic");
  }
  Reader r(bytes.subspan(6));
  std::vector<NamedTensor> out;
  while (!r.done()) {
    const auto name_bytes = r.take(r.u32());
    NamedTensor t;
    t.name.assign(name_bytes.begin(), name_bytes.end());
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u32();
    Tensor values(shape);
    for (float& v : values.data()) v = std::bit_cast<float>(r.u32());
    t.tensor = std::move(values);
    out.push_back(std::move(t));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  write_file_bytes(path, serialize_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file_bytes(path));
}

}  // namespace stnet
