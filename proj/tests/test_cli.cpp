#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "triplane/dataset_io.hpp"
#include "triplane/nn/checkpoint.hpp"
#include "triplane/synthesis.hpp"
#include "triplane/volume_io.hpp"

using namespace triplane;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(TRIPLANE_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// fresh working directory per test case
fs::path work_dir(const char* leaf) {
  auto d = fs::temp_directory_path() / "triplane_test_cli" / leaf;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("gen produces a loadable dataset with the requested split") {
  const auto dir = work_dir("gen");
  const auto ds_dir = dir / "ds";
  const auto r = run_cli("gen --out " + ds_dir.string() +
                         " --volumes 6 --dims 12 --split 0.5 --seed 3");
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("3 train / 3 test") != std::string::npos);

  const Dataset ds = load_dataset(ds_dir);
  CHECK(ds.pairs.size() == 6);
  CHECK(ds.train_indices.size() == 3);
  CHECK(ds.test_indices.size() == 3);
  CHECK(ds.pairs[0].clean.dims() == Dims{12, 12, 12});

  // the echoed config records the resolved run settings and a hash
  REQUIRE(fs::exists(ds_dir / "config.json"));
  const auto cfg = nlohmann::json::parse(std::ifstream(ds_dir / "config.json"));
  CHECK(cfg["seed"] == 3);
  CHECK(cfg["scene"]["volumes"] == 6);
  CHECK(ds.manifest.contains("config_hash"));
}

TEST_CASE("gen is reproducible for a fixed seed") {
  const auto dir = work_dir("gen_repro");
  const auto a = dir / "a", b = dir / "b";
  REQUIRE(run_cli("gen --out " + a.string() + " --volumes 2 --dims 8 --seed 9").exit_code == 0);
  REQUIRE(run_cli("gen --out " + b.string() + " --volumes 2 --dims 8 --seed 9").exit_code == 0);
  const Dataset da = load_dataset(a), db = load_dataset(b);
  CHECK(da.pairs[0].noisy == db.pairs[0].noisy);
  CHECK(da.pairs[1].clean == db.pairs[1].clean);
}

TEST_CASE("corrupt volume input exits 3 with the byte offset in the message") {
  const auto dir = work_dir("corrupt");
  std::ofstream(dir / "bad.vol", std::ios::binary) << "JUNKJUNKJUNK";
  const auto r = run_cli("denoise --model nowhere --in " + (dir / "bad.vol").string() +
                         " --out " + (dir / "out.vol").string() + " --mode gaussian");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("bad magic") != std::string::npos);
  CHECK(r.output.find("TVX1") != std::string::npos);
}

TEST_CASE("unknown config keys exit 2 with the key path") {
  const auto dir = work_dir("badcfg");
  std::ofstream(dir / "cfg.json") << R"({"scene": {"volums": 5}})";
  const auto r = run_cli("gen --config " + (dir / "cfg.json").string() + " --out " +
                         (dir / "x").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("scene.volums") != std::string::npos);
}

TEST_CASE("invalid command line exits 2") {
  CHECK(run_cli("gen").exit_code == 2);                       // missing --out
  CHECK(run_cli("denoise --mode warp").exit_code == 2);       // missing required opts
  CHECK(run_cli("frobnicate").exit_code == 2);                // unknown subcommand
}

TEST_CASE("denoise with a classical filter mode preserves a constant volume") {
  const auto dir = work_dir("filter");
  write_vol(Volume({6, 16, 16}, 0.42f), dir / "in.vol");
  const auto r = run_cli("denoise --in " + (dir / "in.vol").string() + " --out " +
                         (dir / "out.vol").string() + " --mode gaussian");
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  const Volume out = read_vol(dir / "out.vol");
  REQUIRE(out.dims() == Dims{6, 16, 16});
  for (float x : out.data()) CHECK(x == doctest::Approx(0.42f).epsilon(1e-5));
}

TEST_CASE("train then denoise matches the library pipeline end to end") {
  const auto dir = work_dir("train");
  const auto ds_dir = dir / "ds";
  const auto model_dir = dir / "model";

  auto r = run_cli("gen --out " + ds_dir.string() +
                   " --volumes 4 --dims 16 --split 0.5 --seed 11 --family gaussian");
  REQUIRE(r.exit_code == 0);
  r = run_cli("train --dataset " + ds_dir.string() + " --out " + model_dir.string() +
              " --depth 1 --base-channels 4 --epochs 2 --batch 4 --seed 11");
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);

  // all three planes with per-axis losses
  for (const char* f : {"model_xy.ckpt", "model_xt.ckpt", "model_yt.ckpt", "triplanar.json",
                        "losses_xy.csv", "losses_xt.csv", "losses_yt.csv", "config.json"})
    CHECK(fs::exists(model_dir / f));

  r = run_cli("denoise --model " + model_dir.string() + " --in " +
              (ds_dir / "noisy_0001.vol").string() + " --out " + (dir / "out.vol").string() +
              " --mode triplanar");
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);

  // the CLI result must equal the library applied to the same inputs
  const TriPlanarModel tm = load_triplanar(model_dir);
  const Volume in = read_vol(ds_dir / "noisy_0001.vol");
  CHECK(read_vol(dir / "out.vol") == denoise_triplanar(tm, in));

  // single-plane mode routes through the xy model only
  r = run_cli("denoise --model " + model_dir.string() + " --in " +
              (ds_dir / "noisy_0001.vol").string() + " --out " + (dir / "xy.vol").string() +
              " --mode xy");
  REQUIRE(r.exit_code == 0);
  CHECK(read_vol(dir / "xy.vol") == denoise_single_plane(tm.xy, in, SliceAxis::XY));
}

TEST_CASE("interrupted training resumes to the same loss history") {
  const auto dir = work_dir("resume");
  const auto ds_dir = dir / "ds";
  REQUIRE(run_cli("gen --out " + ds_dir.string() +
                  " --volumes 4 --dims 16 --split 0.5 --seed 13 --family gaussian")
              .exit_code == 0);

  const std::string common = " --dataset " + ds_dir.string() +
                             " --depth 1 --base-channels 4 --batch 4 --seed 13 --planes xy";

  // straight 4-epoch run
  const auto full = dir / "full";
  REQUIRE(run_cli("train --out " + full.string() + common + " --epochs 4").exit_code == 0);

  // 2 epochs, then re-invoke to 4; the second call resumes from the checkpoint
  const auto split = dir / "split";
  REQUIRE(run_cli("train --out " + split.string() + common + " --epochs 2").exit_code == 0);
  const auto r = run_cli("train --out " + split.string() + common + " --epochs 4");
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("resuming") != std::string::npos);

  auto read_text = [](const fs::path& p) {
    std::ifstream f(p);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(read_text(full / "losses_xy.csv") == read_text(split / "losses_xy.csv"));

  // and the final models are bit-identical
  auto [mfull, _a] = nn::load_checkpoint(full / "model_xy.ckpt");
  auto [msplit, _b] = nn::load_checkpoint(split / "model_xy.ckpt");
  CHECK(mfull == msplit);
}

TEST_CASE("export writes one pgm per frame") {
  const auto dir = work_dir("export");
  write_vol(Volume({5, 8, 8}, 0.5f), dir / "v.vol");
  const auto r = run_cli("export --in " + (dir / "v.vol").string() + " --out " +
                         (dir / "frames").string());
  REQUIRE(r.exit_code == 0);
  for (int t = 0; t < 5; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.pgm", t);
    CHECK(fs::exists(dir / "frames" / name));
  }
}

TEST_CASE("bench writes deterministic metrics and separate timings") {
  const auto dir = work_dir("bench");
  const auto ds_dir = dir / "ds";
  const auto model_dir = dir / "model";
  REQUIRE(run_cli("gen --out " + ds_dir.string() +
                  " --volumes 4 --dims 16 --split 0.5 --seed 17 --family gaussian")
              .exit_code == 0);
  REQUIRE(run_cli("train --dataset " + ds_dir.string() + " --out " + model_dir.string() +
                  " --depth 1 --base-channels 4 --epochs 1 --batch 4 --seed 17")
              .exit_code == 0);

  const auto b1 = dir / "b1", b2 = dir / "b2";
  auto r = run_cli("bench --dataset " + ds_dir.string() + " --model " + model_dir.string() +
                   " --out " + b1.string());
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(run_cli("bench --dataset " + ds_dir.string() + " --model " + model_dir.string() +
                  " --out " + b2.string())
              .exit_code == 0);

  for (const char* f : {"metrics.json", "timings.json", "report.txt"}) {
    CHECK(fs::exists(b1 / f));
    CHECK(fs::exists(b2 / f));
  }

  auto read_text = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  // two identical runs: metrics byte-identical; timings carry wall clock
  CHECK(read_text(b1 / "metrics.json") == read_text(b2 / "metrics.json"));
  const auto metrics = nlohmann::json::parse(read_text(b1 / "metrics.json"));
  REQUIRE(metrics["methods"].is_array());
  CHECK(metrics["methods"].size() == 6);
  CHECK(read_text(b1 / "metrics.json").find("runtime") == std::string::npos);
  CHECK(read_text(b1 / "timings.json").find("runtime") != std::string::npos);

  // the table mirrors the configured method list
  const std::string table = read_text(b1 / "report.txt");
  for (const char* m : {"noisy", "unet-xy", "triplanar", "nlm", "gaussian", "bilateral"})
    CHECK(table.find(m) != std::string::npos);
}

TEST_CASE("missing bench inputs are reported up front") {
  const auto dir = work_dir("bench_missing");
  const auto r = run_cli("bench --dataset " + (dir / "nope").string() + " --model " +
                         (dir / "also_nope").string() + " --out " + (dir / "out").string());
  CHECK(r.exit_code == 3);
}
