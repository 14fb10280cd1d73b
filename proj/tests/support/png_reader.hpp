#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

namespace tstest {

struct DecodedPng {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

// Minimal decoder for 8-bit grayscale/RGB PNGs with filter type 0 rows.
// Verifies the signature, every chunk CRC and the IEND terminator.
inline DecodedPng decode_png(const std::vector<std::uint8_t>& b) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (b.size() < 8 || !std::equal(sig, sig + 8, b.begin())) throw std::runtime_error("bad signature");
  auto be32 = [&](std::size_t at) {
    return (std::uint32_t(b.at(at)) << 24) | (std::uint32_t(b.at(at + 1)) << 16) | (std::uint32_t(b.at(at + 2)) << 8) |
           std::uint32_t(b.at(at + 3));
  };
  DecodedPng out;
  std::vector<std::uint8_t> idat;
  bool ended = false;
  for (std::size_t at = 8; at < b.size();) {
    const std::uint32_t len = be32(at);
    const std::string type(b.begin() + std::ptrdiff_t(at + 4), b.begin() + std::ptrdiff_t(at + 8));
    const std::uint32_t crc = be32(at + 8 + len);
    if (crc != crc32(0, b.data() + at + 4, len + 4)) throw std::runtime_error("crc mismatch in " + type);
    const std::uint8_t* data = b.data() + at + 8;
    if (type == "IHDR") {
      out.width = be32(at + 8);
      out.height = be32(at + 12);
      if (data[8] != 8) throw std::runtime_error("bit depth");
      out.channels = data[9] == 0 ? 1 : data[9] == 2 ? 3 : 0;
      if (!out.channels) throw std::runtime_error("color type");
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      ended = true;
    }
    at += 12 + len;
  }
  if (!ended) throw std::runtime_error("missing IEND");
  const std::size_t stride = out.width * std::size_t(out.channels);
  std::vector<std::uint8_t> raw((stride + 1) * out.height);
  uLongf raw_len = raw.size();
  if (uncompress(raw.data(), &raw_len, idat.data(), idat.size()) != Z_OK || raw_len != raw.size()) {
    throw std::runtime_error("inflate");
  }
  for (std::size_t y = 0; y < out.height; ++y) {
    if (raw[y * (stride + 1)] != 0) throw std::runtime_error("unsupported filter");
    out.pixels.insert(out.pixels.end(), raw.begin() + std::ptrdiff_t(y * (stride + 1) + 1),
                      raw.begin() + std::ptrdiff_t((y + 1) * (stride + 1)));
  }
  return out;
}

}  // namespace tstest
