#include "triplane/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "triplane/errors.hpp"

namespace triplane {

namespace {

constexpr char kVolMagic[4] = {'T', 'V', 'X', '1'};

void put_u32_le(std::ostream& os, uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                        static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32_le(const unsigned char* b) {
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

static_assert(sizeof(float) == 4, "float must be IEEE-754 binary32");

}  // namespace

void write_vol(const Volume& v, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(kVolMagic, 4);
  put_u32_le(os, v.dims().t);
  put_u32_le(os, v.dims().h);
  put_u32_le(os, v.dims().w);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data().data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
  } else {
    for (float f : v.data()) {
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32_le(os, bits);
    }
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

Volume read_vol(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");

  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kVolMagic, 4) != 0)
    throw IoError("'" + path.string() + "': bad magic at byte 0, expected \"TVX1\"");

  unsigned char hdr[12];
  is.read(reinterpret_cast<char*>(hdr), 12);
  if (is.gcount() != 12)
    throw IoError("'" + path.string() + "': truncated header at byte " +
                  std::to_string(4 + is.gcount()) + ", expected 16 header bytes");

  Dims d{get_u32_le(hdr), get_u32_le(hdr + 4), get_u32_le(hdr + 8)};
  if (d.t == 0 || d.h == 0 || d.w == 0)
    throw IoError("'" + path.string() + "': invalid dims " + to_string(d) + " at byte 4");
  if (d.count() > (static_cast<size_t>(1) << 31))
    throw IoError("'" + path.string() + "': dims " + to_string(d) + " exceed supported size");

  std::vector<float> data(d.count());
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (static_cast<size_t>(is.gcount()) != data.size() * sizeof(float))
    throw IoError("'" + path.string() + "': truncated payload at byte " +
                  std::to_string(16 + is.gcount()) + ", expected " +
                  std::to_string(16 + data.size() * sizeof(float)) + " bytes total");
  if (is.peek() != std::char_traits<char>::eof())
    throw IoError("'" + path.string() + "': trailing bytes after " +
                  std::to_string(16 + data.size() * sizeof(float)) + " expected bytes");

  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : data) {
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&f, &bits, 4);
    }
  }
  return Volume(d, std::move(data));
}

void write_pgm(const Image& img, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "P5\n" << img.cols << " " << img.rows << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  for (size_t i = 0; i < img.size(); ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    bytes[i] = static_cast<unsigned char>(std::lround(255.0f * v));
  }
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

void export_frames_pgm(const Volume& v, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (uint32_t t = 0; t < v.dims().t; ++t) {
    std::snprintf(name, sizeof(name), "frame_%04u.pgm", t);
    write_pgm(v.frame(t), dir / name);
  }
}

}  // namespace triplane
