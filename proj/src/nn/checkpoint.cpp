#include "triplane/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "triplane/errors.hpp"

namespace triplane::nn {

namespace {

constexpr char kMagic[4] = {'U', 'N', 'C', '1'};
constexpr uint32_t kVersion = 1;

void put_u32_le(std::ostream& os, uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                        static_cast<unsigned char>(x >> 16),
                        static_cast<unsigned char>(x >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32_le(std::istream& is, const std::string& path, const char* what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw IoError("'" + path + "': truncated checkpoint (" + what + ")");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, std::span<const float> data) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * 4));
  } else {
    for (float f : data) {
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32_le(os,bits);
    }
  }
}

void read_f32(std::istream& is, std::span<float> data, const std::string& path,
              const char* what) {
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 4));
  if (static_cast<size_t>(is.gcount()) != data.size() * 4)
    throw IoError("'" + path + "': truncated checkpoint (" + what + " tensor)");
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : data) {
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&f, &bits, 4);
    }
  }
}

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv3x3: return "conv3x3";
    case LayerKind::UpConv2x2: return "upconv2x2";
    case LayerKind::Conv1x1: return "conv1x1";
  }
  return "?";
}

}  // namespace

void save_checkpoint(const UNet<float>& m, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& li : m.layers())
    shapes.push_back({{"name", li.name},
                      {"kind", kind_name(li.kind)},
                      {"in_ch", li.in_ch},
                      {"out_ch", li.out_ch},
                      {"weights", li.w_count},
                      {"biases", li.b_count}});
  const nlohmann::json blob = {{"config", m.config()},
                               {"epoch", meta.epoch},
                               {"axis", meta.axis},
                               {"loss_history", meta.loss_history},
                               {"step", m.step()},
                               {"layers", std::move(shapes)}};
  const std::string json = blob.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(kMagic, 4);
  put_u32_le(os, kVersion);
  put_u32_le(os, static_cast<uint32_t>(json.size()));
  os.write(json.data(), static_cast<std::streamsize>(json.size()));
  write_f32(os, m.params());
  write_f32(os, m.adam_m());
  write_f32(os, m.adam_v());
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<UNet<float>, CheckpointMeta> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");

  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("'" + path.string() + "': bad checkpoint magic, expected \"UNC1\"");
  const uint32_t version = get_u32_le(is, path.string(), "version");
  if (version != kVersion)
    throw IoError("'" + path.string() + "': unsupported checkpoint version " +
                  std::to_string(version) + ", expected " + std::to_string(kVersion));

  const uint32_t json_len = get_u32_le(is, path.string(), "json length");
  std::string json(json_len, '\0');
  is.read(json.data(), json_len);
  if (static_cast<size_t>(is.gcount()) != json_len)
    throw IoError("'" + path.string() + "': truncated checkpoint (json blob)");

  nlohmann::json blob;
  UNetConfig cfg;
  CheckpointMeta meta;
  uint64_t step = 0;
  try {
    blob = nlohmann::json::parse(json);
    cfg = blob.at("config").get<UNetConfig>();
    meta.epoch = blob.at("epoch").get<uint32_t>();
    meta.axis = blob.at("axis").get<std::string>();
    blob.at("loss_history").get_to(meta.loss_history);
    step = blob.at("step").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "': corrupt checkpoint json: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("'" + path.string() + "': corrupt checkpoint config: " + e.what());
  }

  UNet<float> m(cfg);
  const auto& shapes = blob.at("layers");
  if (shapes.size() != m.layers().size())
    throw IoError("'" + path.string() + "': checkpoint lists " + std::to_string(shapes.size()) +
                  " layers, config implies " + std::to_string(m.layers().size()));
  for (size_t i = 0; i < m.layers().size(); ++i) {
    const auto& li = m.layers()[i];
    const auto& sh = shapes.at(i);
    if (sh.at("name") != li.name || sh.at("kind") != kind_name(li.kind) ||
        sh.at("in_ch") != li.in_ch || sh.at("out_ch") != li.out_ch ||
        sh.at("weights") != li.w_count || sh.at("biases") != li.b_count)
      throw IoError("'" + path.string() + "': layer " + std::to_string(i) +
                    " shape table mismatch (" + sh.dump() + ")");
  }

  read_f32(is, m.params(), path.string(), "params");
  read_f32(is, m.adam_m(), path.string(), "adam m");
  read_f32(is, m.adam_v(), path.string(), "adam v");
  if (is.peek() != std::char_traits<char>::eof())
    throw IoError("'" + path.string() + "': trailing bytes after checkpoint payload");
  m.set_step(step);
  return {std::move(m), std::move(meta)};
}

}  // namespace triplane::nn
