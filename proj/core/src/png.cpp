#include "pap/png.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "pap/errors.hpp"

namespace pap {

namespace {

constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

std::uint32_t get_be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
  put_be32(out, crc);
}

}  // namespace

Tensor quantize_8bit(const Tensor& image) {
  Tensor out = image;
  for (auto& v : out.data()) {
    double clamped = std::clamp(v, 0.0, 1.0);
    v = std::round(clamped * 255.0) / 255.0;
  }
  return out;
}

void png_write_gray(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 2) throw ValidationError("png_write_gray: expected a 2-D image");
  std::uint32_t h = static_cast<std::uint32_t>(image.shape()[0]);
  std::uint32_t w = static_cast<std::uint32_t>(image.shape()[1]);

  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(h) * (w + 1));
  for (std::uint32_t y = 0; y < h; ++y) {
    raw.push_back(0);  // filter type none
    for (std::uint32_t x = 0; x < w; ++x) {
      double v = std::clamp(image.at2(y, x), 0.0, 1.0);
      raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }

  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw IoError(IoError::Kind::open_failed, "png deflate failed: " + path.string());
  }
  compressed.resize(compressed_size);

  std::vector<unsigned char> file;
  file.insert(file.end(), kPngSig, kPngSig + 8);
  std::vector<unsigned char> ihdr;
  put_be32(ihdr, w);
  put_be32(ihdr, h);
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // filter method 0
  ihdr.push_back(0);  // no interlace
  append_chunk(file, "IHDR", ihdr);
  append_chunk(file, "IDAT", compressed);
  append_chunk(file, "IEND", {});

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(IoError::Kind::open_failed, "cannot open for write: " + path.string());
  os.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
}

Tensor png_read_gray(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoError::Kind::open_failed, "cannot open for read: " + path.string());
  std::vector<unsigned char> file((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  if (file.size() < 8 || std::memcmp(file.data(), kPngSig, 8) != 0) {
    throw IoError(IoError::Kind::bad_magic, "not a PNG file: " + path.string());
  }

  std::uint32_t w = 0, h = 0;
  bool have_ihdr = false;
  std::vector<unsigned char> idat;
  std::size_t pos = 8;
  while (pos + 8 <= file.size()) {
    std::uint32_t len = get_be32(file.data() + pos);
    if (pos + 12 + len > file.size()) {
      throw IoError(IoError::Kind::truncated, "truncated PNG chunk: " + path.string());
    }
    const char* type = reinterpret_cast<const char*>(file.data() + pos + 4);
    const unsigned char* payload = file.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError(IoError::Kind::truncated, "bad IHDR: " + path.string());
      w = get_be32(payload);
      h = get_be32(payload + 4);
      if (payload[8] != 8 || payload[9] != 0 || payload[12] != 0) {
        throw IoError(IoError::Kind::bad_dtype,
                      "only 8-bit grayscale non-interlaced PNG supported: " + path.string());
      }
      have_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!have_ihdr || idat.empty()) {
    throw IoError(IoError::Kind::truncated, "missing PNG chunks: " + path.string());
  }

  std::size_t raw_size = static_cast<std::size_t>(h) * (static_cast<std::size_t>(w) + 1);
  std::vector<unsigned char> raw(raw_size);
  uLongf dest_len = static_cast<uLongf>(raw_size);
  if (uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      dest_len != raw_size) {
    throw IoError(IoError::Kind::truncated, "png inflate failed: " + path.string());
  }

  // Undo scanline filters (grayscale, 1 byte per pixel).
  Tensor out({h, w});
  std::vector<unsigned char> prev(w, 0);
  std::vector<unsigned char> cur(w, 0);
  for (std::uint32_t y = 0; y < h; ++y) {
    unsigned char filter = raw[static_cast<std::size_t>(y) * (w + 1)];
    const unsigned char* line = raw.data() + static_cast<std::size_t>(y) * (w + 1) + 1;
    for (std::uint32_t x = 0; x < w; ++x) {
      unsigned char a = x > 0 ? cur[x - 1] : 0;
      unsigned char b = prev[x];
      unsigned char c = x > 0 ? prev[x - 1] : 0;
      int v = line[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: {
          int p = a + b - c;
          int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
          v += (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          break;
        }
        default:
          throw IoError(IoError::Kind::bad_dtype, "unknown PNG filter: " + path.string());
      }
      cur[x] = static_cast<unsigned char>(v & 0xff);
      out.at2(y, x) = static_cast<double>(cur[x]) / 255.0;
    }
    std::swap(prev, cur);
  }
  return out;
}

}  // namespace pap
