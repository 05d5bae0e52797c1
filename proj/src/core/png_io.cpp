#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "tote/core/errors.hpp"
#include "tote/core/image.hpp"

// Minimal PNG codec over zlib: 8-bit RGB writer, reader for non-interlaced
// 8-bit gray/RGB/RGBA with all five scanline filters. Enough for the files
// this project produces.

namespace tote {

namespace {

void put_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(uint8_t(x >> 24));
  v.push_back(uint8_t(x >> 16));
  v.push_back(uint8_t(x >> 8));
  v.push_back(uint8_t(x));
}

uint32_t get_u32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void write_chunk(std::ofstream& f, const char type[4], const std::vector<uint8_t>& payload) {
  std::vector<uint8_t> head;
  put_u32(head, uint32_t(payload.size()));
  f.write(reinterpret_cast<const char*>(head.data()), 4);
  f.write(type, 4);
  if (!payload.empty()) f.write(reinterpret_cast<const char*>(payload.data()), long(payload.size()));
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!payload.empty()) crc = crc32(crc, payload.data(), uInt(payload.size()));
  std::vector<uint8_t> tail;
  put_u32(tail, uint32_t(crc));
  f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
  if (img.h <= 0 || img.w <= 0 || (img.c != 1 && img.c != 3))
    throw DataError("write_png: unsupported image shape for " + path);

  // Raw scanlines, filter byte 0 (None) per row, always emitted as RGB.
  const int w = img.w, h = img.h;
  std::vector<uint8_t> raw(size_t(h) * (size_t(w) * 3 + 1));
  size_t pos = 0;
  for (int y = 0; y < h; ++y) {
    raw[pos++] = 0;
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < 3; ++k) {
        const double v = img.at(y, x, img.c == 1 ? 0 : k);
        raw[pos++] = uint8_t(std::lround(std::min(std::max(v, 0.0), 1.0) * 255.0));
      }
  }

  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<uint8_t> idat(bound);
  if (compress2(idat.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw DataError("write_png: deflate failed for " + path);
  idat.resize(bound);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_png: cannot open " + path);
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  f.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<uint8_t> ihdr;
  put_u32(ihdr, uint32_t(w));
  put_u32(ihdr, uint32_t(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  write_chunk(f, "IHDR", ihdr);
  write_chunk(f, "IDAT", idat);
  write_chunk(f, "IEND", {});
  if (!f) throw DataError("write_png: write failed for " + path);
}

Image read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_png: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw DataError("read_png: not a PNG file: " + path);

  uint32_t w = 0, h = 0;
  int color_type = -1;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    const uint32_t len = get_u32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) throw DataError("read_png: truncated chunk in " + path);
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const uint8_t* payload = &bytes[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      w = get_u32(payload);
      h = get_u32(payload + 4);
      const int depth = payload[8];
      color_type = payload[9];
      if (depth != 8 || payload[12] != 0)
        throw DataError("read_png: unsupported PNG encoding in " + path);
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  int nch = 0;
  switch (color_type) {
    case 0: nch = 1; break;
    case 2: nch = 3; break;
    case 6: nch = 4; break;
    default: throw DataError("read_png: unsupported color type in " + path);
  }
  if (w == 0 || h == 0) throw DataError("read_png: missing IHDR in " + path);

  const size_t stride = size_t(w) * nch;
  std::vector<uint8_t> raw(size_t(h) * (stride + 1));
  uLongf raw_len = uLongf(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw DataError("read_png: inflate failed for " + path);

  // Undo per-row filters in place.
  std::vector<uint8_t> prev(stride, 0);
  Image img(int(h), int(w), 3);
  for (uint32_t y = 0; y < h; ++y) {
    uint8_t* row = &raw[size_t(y) * (stride + 1)];
    const int filter = row[0];
    uint8_t* cur = row + 1;
    for (size_t i = 0; i < stride; ++i) {
      const int a = (i >= size_t(nch)) ? cur[i - nch] : 0;
      const int b = prev[i];
      const int c = (i >= size_t(nch)) ? prev[i - nch] : 0;
      int v = cur[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw DataError("read_png: bad filter byte in " + path);
      }
      cur[i] = uint8_t(v);
    }
    std::memcpy(prev.data(), cur, stride);
    for (uint32_t x = 0; x < w; ++x)
      for (int k = 0; k < 3; ++k)
        img.at(int(y), int(x), k) = cur[size_t(x) * nch + std::min(k, nch - 1)] / 255.0;
  }
  return img;
}

}  // namespace tote
