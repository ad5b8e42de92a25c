#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "triplane/errors.hpp"
#include "triplane/nn/checkpoint.hpp"
#include "triplane/rng.hpp"

using namespace triplane;
using nn::CheckpointMeta;
using nn::UNet;
using nn::UNetConfig;

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  auto d = fs::temp_directory_path() / "triplane_test_ckpt";
  fs::create_directories(d);
  return d / name;
}

UNet<float> trained_like_net(uint64_t seed) {
  UNetConfig c;
  c.depth = 2;
  c.base_channels = 4;
  c.seed = seed;
  UNet<float> net(c);
  // non-trivial optimizer state, as after real training steps
  Rng rng(seed + 1);
  for (auto& x : net.adam_m()) x = static_cast<float>(rng.next_double() - 0.5);
  for (auto& x : net.adam_v()) x = static_cast<float>(rng.next_double());
  net.set_step(1234);
  return net;
}

}  // namespace

TEST_CASE("checkpoint round-trips model, optimizer state, and meta bit-exactly") {
  const auto path = temp_file("roundtrip.ckpt");
  const UNet<float> net = trained_like_net(8);
  CheckpointMeta meta;
  meta.epoch = 17;
  meta.axis = "xt";
  meta.loss_history = {0.5, 0.25, 0.125};

  nn::save_checkpoint(net, meta, path);
  auto [back, meta2] = nn::load_checkpoint(path);

  CHECK(back == net);  // config, params, m, v, step
  CHECK(meta2 == meta);
  fs::remove(path);
}

TEST_CASE("empty axis and loss history survive the round trip") {
  const auto path = temp_file("bare.ckpt");
  UNetConfig c;
  c.depth = 1;
  c.base_channels = 2;
  const UNet<float> net(c);
  nn::save_checkpoint(net, CheckpointMeta{}, path);
  auto [back, meta] = nn::load_checkpoint(path);
  CHECK(back == net);
  CHECK(meta.epoch == 0);
  CHECK(meta.axis.empty());
  CHECK(meta.loss_history.empty());
  fs::remove(path);
}

TEST_CASE("loading a missing file raises IoError") {
  CHECK_THROWS_AS(nn::load_checkpoint(temp_file("does_not_exist.ckpt")), IoError);
}

TEST_CASE("wrong magic is rejected with the offending bytes named") {
  const auto path = temp_file("magic.ckpt");
  std::ofstream(path, std::ios::binary) << "XXXX content that is long enough to matter";
  try {
    nn::load_checkpoint(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("UNC1") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("unsupported version is rejected") {
  const auto path = temp_file("version.ckpt");
  const UNet<float> net = trained_like_net(9);
  nn::save_checkpoint(net, CheckpointMeta{}, path);
  // bump the little-endian version field at bytes 4..7
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(4);
  const char v2[4] = {2, 0, 0, 0};
  f.write(v2, 4);
  f.close();
  try {
    nn::load_checkpoint(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("truncated parameter payload is rejected") {
  const auto path = temp_file("trunc.ckpt");
  const UNet<float> net = trained_like_net(10);
  nn::save_checkpoint(net, CheckpointMeta{}, path);
  fs::resize_file(path, fs::file_size(path) - 13);
  CHECK_THROWS_AS(nn::load_checkpoint(path), IoError);
  fs::remove(path);
}

TEST_CASE("trailing garbage after the payload is rejected") {
  const auto path = temp_file("trailing.ckpt");
  const UNet<float> net = trained_like_net(11);
  nn::save_checkpoint(net, CheckpointMeta{}, path);
  std::ofstream(path, std::ios::binary | std::ios::app) << "extra";
  CHECK_THROWS_AS(nn::load_checkpoint(path), IoError);
  fs::remove(path);
}

TEST_CASE("corrupt json blob is rejected") {
  const auto path = temp_file("json.ckpt");
  const UNet<float> net = trained_like_net(12);
  nn::save_checkpoint(net, CheckpointMeta{}, path);
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(12);  // first byte of the JSON document, after magic/version/length
  f.write("#", 1);
  f.close();
  CHECK_THROWS_AS(nn::load_checkpoint(path), IoError);
  fs::remove(path);
}

TEST_CASE("save then load then save produces an identical file") {
  const auto p1 = temp_file("stable1.ckpt");
  const auto p2 = temp_file("stable2.ckpt");
  const UNet<float> net = trained_like_net(13);
  CheckpointMeta meta;
  meta.epoch = 3;
  meta.axis = "yt";
  meta.loss_history = {1.0, 0.9, 0.8};
  nn::save_checkpoint(net, meta, p1);
  auto [back, meta2] = nn::load_checkpoint(p1);
  nn::save_checkpoint(back, meta2, p2);

  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  fs::remove(p1);
  fs::remove(p2);
}
