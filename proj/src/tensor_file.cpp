#include "emohead/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace emohead {

namespace {

constexpr std::size_t kFixedHeader = 7;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.rank() < 1 || t.rank() > 3) {
    throw FormatError("tensor file supports rank 1..3, got " + std::to_string(t.rank()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeader + 4 * t.rank() + 4 * t.numel());
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(kTensorFormatVersion);
  out.push_back(kDtypeFloat32);
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (const auto d : t.shape()) {
    if (d == 0 || d > UINT32_MAX) throw FormatError("dimension out of range: " + shape_str(t.shape()));
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeader) {
    throw CorruptionError("tensor file truncated inside header (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) throw FormatError("bad magic, expected SERT");
  if (bytes[4] != kTensorFormatVersion) throw FormatError("unsupported format version " + std::to_string(bytes[4]));
  if (bytes[5] != kDtypeFloat32) throw FormatError("unsupported dtype code " + std::to_string(bytes[5]));
  const std::size_t rank = bytes[6];
  if (rank < 1 || rank > 3) throw FormatError("unsupported rank " + std::to_string(rank));
  const std::size_t header = kFixedHeader + 4 * rank;
  if (bytes.size() < header) throw CorruptionError("tensor file truncated inside dims");
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = get_u32(bytes, kFixedHeader + 4 * i);
    if (shape[i] == 0) throw FormatError("zero-sized dimension in header");
  }
  const std::size_t n = shape_numel(shape);
  const std::size_t payload = bytes.size() - header;
  if (payload != 4 * n) {
    throw CorruptionError("payload has " + std::to_string(payload) + " bytes, header " + shape_str(shape) +
                          " requires " + std::to_string(4 * n));
  }
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  return Tensor(std::move(shape), std::move(values));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

}  // namespace emohead
