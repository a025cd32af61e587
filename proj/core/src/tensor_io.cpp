#include "pap/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pap/errors.hpp"

namespace pap {

namespace {

constexpr char kMagic[4] = {'P', 'A', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

bool get_u64(std::istream& is, std::uint64_t& v) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

}  // namespace

void tensor_write(const std::filesystem::path& path, const Tensor& t) {
  if (!t.all_finite()) {
    throw IoError(IoError::Kind::non_finite, "refusing to write non-finite tensor: " + path.string());
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(IoError::Kind::open_failed, "cannot open for write: " + path.string());
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(t.dtype()));
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) put_u64(os, e);
  if (t.dtype() == Dtype::f64) {
    for (double v : t.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  } else {
    for (double v : t.data()) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!os) throw IoError(IoError::Kind::open_failed, "write failed: " + path.string());
}

Tensor tensor_read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoError::Kind::open_failed, "cannot open for read: " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw IoError(IoError::Kind::truncated, "truncated header: " + path.string());
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(IoError::Kind::bad_magic, "bad magic bytes: " + path.string());
  }
  std::uint32_t version = 0, dtype_code = 0, rank = 0;
  if (!get_u32(is, version) || !get_u32(is, dtype_code) || !get_u32(is, rank)) {
    throw IoError(IoError::Kind::truncated, "truncated header: " + path.string());
  }
  if (version != kVersion) throw IoError(IoError::Kind::bad_version, "unsupported version: " + path.string());
  if (dtype_code > 1) throw IoError(IoError::Kind::bad_dtype, "unknown dtype code: " + path.string());
  if (rank > 8) throw IoError(IoError::Kind::bad_rank, "implausible rank: " + path.string());
  std::vector<std::uint64_t> shape(rank);
  for (auto& e : shape) {
    if (!get_u64(is, e)) throw IoError(IoError::Kind::truncated, "truncated shape: " + path.string());
  }
  Dtype dtype = static_cast<Dtype>(dtype_code);
  std::size_t n = shape_numel(shape);
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (dtype == Dtype::f64) {
      std::uint64_t bits;
      if (!get_u64(is, bits)) throw IoError(IoError::Kind::truncated, "truncated payload: " + path.string());
      data[i] = std::bit_cast<double>(bits);
    } else {
      std::uint32_t bits;
      if (!get_u32(is, bits)) throw IoError(IoError::Kind::truncated, "truncated payload: " + path.string());
      data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    if (!std::isfinite(data[i])) {
      throw IoError(IoError::Kind::non_finite, "non-finite payload value: " + path.string());
    }
  }
  return Tensor(std::move(shape), std::move(data), dtype);
}

}  // namespace pap
