#include "lantern/image.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "image I/O assumes a little-endian host");

namespace lantern {
namespace {

void put_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void write_chunk(std::ofstream& os, const char type[4],
                 const std::string& payload) {
  std::string head;
  put_u32_be(head, static_cast<std::uint32_t>(payload.size()));
  os.write(head.data(), 4);
  os.write(type, 4);
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size()));
  std::string tail;
  put_u32_be(tail, crc);
  os.write(tail.data(), 4);
}

std::uint8_t quantize(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
  LANTERN_CHECK(img.channels == 3, "write_png: expected a 3-channel image");
  LANTERN_CHECK(img.width > 0 && img.height > 0, "write_png: empty image");

  // Raw scanlines, filter byte 0 per row.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (img.width * 3 + 1));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) raw.push_back(quantize(img.at(x, y, c)));
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  // Fixed level => byte-stable output for identical pixels.
  if (compress2(compressed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw EngineError(cat("write_png: deflate failed for ", path));
  compressed.resize(bound);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw EngineError(cat("cannot open for write: ", path));
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                       '\n'};
  os.write(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  write_chunk(os, "IHDR", ihdr);
  write_chunk(os, "IDAT",
              std::string(reinterpret_cast<const char*>(compressed.data()),
                          compressed.size()));
  write_chunk(os, "IEND", "");
  os.flush();
  if (!os) throw EngineError(cat("write_png: write failed for ", path));
}

void write_float_image(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw EngineError(cat("cannot open for write: ", path));
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(img.width),
                                   static_cast<std::uint32_t>(img.height),
                                   static_cast<std::uint32_t>(img.channels)};
  os.write(reinterpret_cast<const char*>(header), 12);
  std::vector<float> buf(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i)
    buf[i] = static_cast<float>(img.data[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  os.flush();
  if (!os) throw EngineError(cat("float image write failed: ", path));
}

Image read_float_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw EngineError(cat("cannot open image: ", path));
  std::uint32_t header[3];
  is.read(reinterpret_cast<char*>(header), 12);
  if (!is) throw EngineError(cat("image '", path, "': truncated header"));
  LANTERN_CHECK(header[0] > 0 && header[1] > 0 && header[2] > 0 &&
                    header[2] <= 4,
                "image '", path, "': invalid dimensions");
  Image img(static_cast<int>(header[0]), static_cast<int>(header[1]),
            static_cast<int>(header[2]));
  std::vector<float> buf(img.data.size());
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!is) throw EngineError(cat("image '", path, "': truncated data"));
  for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
  return img;
}

}  // namespace lantern
