#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "triplane/config.hpp"
#include "triplane/dataset_io.hpp"
#include "triplane/errors.hpp"
#include "triplane/filters.hpp"
#include "triplane/metrics.hpp"
#include "triplane/nn/checkpoint.hpp"
#include "triplane/nn/train.hpp"
#include "triplane/synthesis.hpp"
#include "triplane/volume_io.hpp"

namespace fs = std::filesystem;
using namespace triplane;

namespace {

// ---------------------------------------------------------------------------
// shared plumbing

struct CommonOpts {
  std::string config_file;

  // flag overrides; only applied when the flag was passed
  std::optional<uint64_t> seed;
  std::optional<uint32_t> volumes;
  std::optional<double> split;
  std::optional<uint32_t> cube;  // --dims N => N^3
  std::optional<std::string> family;
  std::optional<double> sigma, lambda_max;
  std::optional<uint32_t> depth, base_channels, tile;
  std::optional<std::string> padding;
  std::optional<double> lr;
  std::optional<uint32_t> batch, epochs, checkpoint_every;
  std::optional<std::string> planes;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "global seed (overrides config)");
  cmd->add_option("--volumes", o.volumes, "number of volumes to generate");
  cmd->add_option("--split", o.split, "train fraction in (0,1)");
  cmd->add_option("--dims", o.cube, "cube side length (dims become N,N,N)");
  cmd->add_option("--family", o.family, "noise family: gaussian|poisson|mixed");
  cmd->add_option("--sigma", o.sigma, "Gaussian noise sigma");
  cmd->add_option("--lambda-max", o.lambda_max, "Poisson counts at intensity 1");
  cmd->add_option("--depth", o.depth, "U-Net down-sampling levels");
  cmd->add_option("--base-channels", o.base_channels, "channels after the first conv pair");
  cmd->add_option("--padding", o.padding, "conv padding: same|valid");
  cmd->add_option("--tile", o.tile, "nominal training tile size");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--batch", o.batch, "minibatch size");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--checkpoint-every", o.checkpoint_every, "epochs between checkpoints");
  cmd->add_option("--planes", o.planes, "comma-separated plane list, e.g. xy,xt");
}

std::vector<SliceAxis> parse_planes(const std::string& s) {
  std::vector<SliceAxis> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t comma = s.find(',', pos);
    const std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (tok.empty()) throw ConfigError("config: empty plane name in '" + s + "'");
    out.push_back(axis_from_string(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("config: --planes needs at least one plane");
  return out;
}

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig rc;
  if (!o.config_file.empty()) rc = load_config(o.config_file);
  if (o.seed) rc.seed = *o.seed;
  if (o.volumes) rc.volumes = *o.volumes;
  if (o.split) rc.split = *o.split;
  if (o.cube) rc.scene.dims = {*o.cube, *o.cube, *o.cube};
  if (o.family) rc.noise_family = noise_family_from_string(*o.family);
  if (o.sigma) rc.noise_sigma = static_cast<float>(*o.sigma);
  if (o.lambda_max) rc.noise_lambda_max = static_cast<float>(*o.lambda_max);
  if (o.depth) rc.unet.depth = *o.depth;
  if (o.base_channels) rc.unet.base_channels = *o.base_channels;
  if (o.padding) rc.unet.padding = nn::padding_from_string(*o.padding);
  if (o.tile) rc.unet.tile = *o.tile;
  if (o.lr) rc.adam.lr = *o.lr;
  if (o.batch) rc.batch = *o.batch;
  if (o.epochs) rc.epochs = *o.epochs;
  if (o.checkpoint_every) rc.checkpoint_every = *o.checkpoint_every;
  if (o.planes) rc.planes = parse_planes(*o.planes);
  if (!(rc.split > 0.0 && rc.split < 1.0))
    throw ConfigError("config: split must lie in (0,1)");
  if (rc.volumes < 1) throw ConfigError("config: volumes must be >= 1");
  return rc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

// Every command drops the resolved config beside its outputs so a run can be
// reproduced from the artifacts alone.
void echo_config(const RunConfig& rc, const fs::path& out_dir) {
  const nlohmann::json j = resolved_json(rc);
  write_text(out_dir / "config.json", j.dump(2) + "\n");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

const char* plane_file(SliceAxis axis) {
  switch (axis) {
    case SliceAxis::XY: return "model_xy.ckpt";
    case SliceAxis::XT: return "model_xt.ckpt";
    case SliceAxis::YT: return "model_yt.ckpt";
  }
  return "";
}

std::string format_loss_csv(const std::vector<double>& history) {
  std::string csv = "epoch,loss\n";
  char line[64];
  for (size_t i = 0; i < history.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g\n", i, history[i]);
    csv += line;
  }
  return csv;
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const CommonOpts& o, const std::string& out_dir) {
  const RunConfig rc = resolve_config(o);
  NoiseSpec noise{rc.noise_family, rc.noise_sigma, rc.noise_lambda_max, rc.noise_seed()};

  Dataset ds = make_dataset(make_scene_specs(rc), noise, rc.split);
  const nlohmann::json cfg = resolved_json(rc);
  ds.manifest["config"] = cfg;
  ds.manifest["config_hash"] = config_hash(cfg);

  ensure_dir(out_dir);
  save_dataset(ds, out_dir);
  echo_config(rc, out_dir);
  std::cout << "wrote " << ds.pairs.size() << " volume pairs (" << ds.train_indices.size()
            << " train / " << ds.test_indices.size() << " test) to " << out_dir
            << "  config_hash=" << ds.manifest["config_hash"].get<std::string>() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const CommonOpts& o, const std::string& dataset_dir, const std::string& out_dir) {
  const RunConfig rc = resolve_config(o);
  const Dataset ds = load_dataset(dataset_dir);
  ensure_dir(out_dir);
  echo_config(rc, out_dir);

  for (SliceAxis axis : rc.planes) {
    const fs::path ckpt = fs::path(out_dir) / plane_file(axis);

    nn::UNetConfig net_cfg = rc.unet;
    net_cfg.seed = axis_seed(rc.unet_seed(), axis);

    std::optional<nn::UNet<float>> net;
    uint32_t start_epoch = 0;
    std::vector<double> prior;
    if (fs::exists(ckpt)) {
      auto [loaded, meta] = nn::load_checkpoint(ckpt);
      if (meta.axis != to_string(axis))
        throw IoError("'" + ckpt.string() + "': tagged '" + meta.axis + "', expected '" +
                      to_string(axis) + "'");
      net = std::move(loaded);
      start_epoch = meta.epoch;
      prior = meta.loss_history;
      std::cout << to_string(axis) << ": resuming from epoch " << start_epoch << "\n";
    } else {
      net.emplace(net_cfg);
    }

    if (start_epoch < rc.epochs) {
      const SlicePairs pairs = make_slice_pairs(ds, ds.train_indices, axis);
      const auto samples = pairs.samples();

      nn::TrainConfig tc;
      tc.adam = rc.adam;
      tc.batch = rc.batch;
      tc.epochs = rc.epochs;
      tc.start_epoch = start_epoch;
      tc.shuffle_seed = axis_seed(rc.shuffle_seed(), axis);
      tc.checkpoint_every = rc.checkpoint_every;
      tc.checkpoint_path = ckpt;
      tc.axis_tag = to_string(axis);
      tc.prior_loss = prior;

      const auto t0 = std::chrono::steady_clock::now();
      nn::TrainResult res = nn::train(*net, samples, tc, [&](uint32_t epoch, double loss) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s: epoch %u  loss %.6g  (%.1fs)\n", to_string(axis), epoch, loss, secs);
        std::fflush(stdout);
      });
      prior.insert(prior.end(), res.epoch_loss.begin(), res.epoch_loss.end());
    }

    // final save covers epochs==start_epoch (nothing trained) and runs whose
    // checkpoint_every cadence did not land on the last epoch
    nn::save_checkpoint(*net, {rc.epochs, to_string(axis), prior}, ckpt);
    write_text(fs::path(out_dir) / ("losses_" + std::string(to_string(axis)) + ".csv"),
               format_loss_csv(prior));
  }

  const nlohmann::json manifest = {{"format", "triplane-model-v1"},
                                   {"planes",
                                    {{"xy", "model_xy.ckpt"},
                                     {"xt", "model_xt.ckpt"},
                                     {"yt", "model_yt.ckpt"}}}};
  write_text(fs::path(out_dir) / "triplanar.json", manifest.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// denoise

SliceFn filter_fn(const std::string& mode, const FilterParams& f) {
  if (mode == "gaussian")
    return [f](const Image& img) {
      return gaussian_blur(img, f.gaussian_sigma, f.gaussian_ksize);
    };
  if (mode == "bilateral")
    return [f](const Image& img) {
      return bilateral(img, f.bilateral_sigma_s, f.bilateral_sigma_r, f.bilateral_ksize);
    };
  if (mode == "nlm")
    return [f](const Image& img) { return nlm(img, f.nlm_h, f.nlm_patch, f.nlm_window); };
  throw ConfigError("config: unknown mode '" + mode + "'");
}

int cmd_denoise(const CommonOpts& o, const std::string& model_dir, const std::string& in_vol,
                const std::string& out_vol, const std::string& mode,
                const std::string& export_pgm) {
  const RunConfig rc = resolve_config(o);
  const Volume noisy = read_vol(in_vol);

  Volume out;
  if (mode == "triplanar") {
    if (model_dir.empty()) throw ConfigError("config: --model is required for mode triplanar");
    out = denoise_triplanar(load_triplanar(model_dir), noisy);
  } else if (mode == "xy") {
    if (model_dir.empty()) throw ConfigError("config: --model is required for mode xy");
    const PlaneModel pm = load_plane(fs::path(model_dir) / plane_file(SliceAxis::XY));
    out = denoise_single_plane(pm, noisy, SliceAxis::XY);
  } else {
    out = denoise_single_plane(filter_fn(mode, rc.filters), noisy, SliceAxis::XY);
  }

  write_vol(out, out_vol);
  if (!export_pgm.empty()) export_frames_pgm(out, export_pgm);
  std::cout << "wrote " << out_vol << " (" << to_string(out.dims()) << ", mode " << mode
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchMethod {
  std::string name;
  std::function<Volume(const Volume&)> run;
};

int cmd_bench(const CommonOpts& o, const std::string& dataset_dir, const std::string& model_dir,
              const std::string& out_dir) {
  const RunConfig rc = resolve_config(o);

  // enumerate every missing input before any work starts
  std::vector<std::string> missing;
  if (!fs::exists(fs::path(dataset_dir) / "manifest.json"))
    missing.push_back((fs::path(dataset_dir) / "manifest.json").string());
  const bool wants_xy =
      std::find(rc.methods.begin(), rc.methods.end(), "unet-xy") != rc.methods.end();
  const bool wants_tri =
      std::find(rc.methods.begin(), rc.methods.end(), "triplanar") != rc.methods.end();
  if (wants_xy || wants_tri) {
    if (model_dir.empty())
      throw ConfigError("config: --model is required for neural benchmark methods");
    if (wants_xy && !fs::exists(fs::path(model_dir) / "model_xy.ckpt"))
      missing.push_back((fs::path(model_dir) / "model_xy.ckpt").string());
    if (wants_tri) {
      for (const char* f : {"triplanar.json", "model_xy.ckpt", "model_xt.ckpt", "model_yt.ckpt"})
        if (!fs::exists(fs::path(model_dir) / f))
          missing.push_back((fs::path(model_dir) / f).string());
    }
  }
  if (!missing.empty()) {
    std::string msg = "bench: missing inputs:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }

  const Dataset ds = load_dataset(dataset_dir);
  if (ds.test_indices.empty()) throw ConfigError("bench: dataset has no test split");

  // thresholds follow the data actually in the dataset, not the bench config
  float theta_int = rc.theta_int();
  if (ds.manifest.contains("scenes") && !ds.manifest["scenes"].empty()) {
    const SceneSpec first = ds.manifest["scenes"].at(0).get<SceneSpec>();
    const float peak = std::min(1.0f, first.background + first.intensity_max);
    theta_int = first.background + rc.theta_int_factor * (peak - first.background);
  }

  std::optional<PlaneModel> xy_model;
  std::optional<TriPlanarModel> tri_model;
  if (wants_xy) xy_model = load_plane(fs::path(model_dir) / "model_xy.ckpt");
  if (wants_tri) tri_model = load_triplanar(model_dir);

  std::vector<BenchMethod> methods;
  for (const std::string& name : rc.methods) {
    if (name == "noisy")
      methods.push_back({name, [](const Volume& v) { return v; }});
    else if (name == "unet-xy")
      methods.push_back({name, [&](const Volume& v) {
                           return denoise_single_plane(*xy_model, v, SliceAxis::XY);
                         }});
    else if (name == "triplanar")
      methods.push_back({name, [&](const Volume& v) { return denoise_triplanar(*tri_model, v); }});
    else
      methods.push_back({name, [fn = filter_fn(name, rc.filters)](const Volume& v) {
                           return denoise_single_plane(fn, v, SliceAxis::XY);
                         }});
  }

  MetricsReport report;
  report.theta_int = theta_int;
  report.theta_area = rc.theta_area;
  report.volumes = static_cast<uint32_t>(ds.test_indices.size());

  for (const BenchMethod& method : methods) {
    double sq_sum = 0.0;
    size_t px = 0;
    double tv_sum = 0.0;
    uint64_t phantoms = 0;
    double seconds = 0.0;

    for (size_t idx : ds.test_indices) {
      const VolumePair& pair = ds.pairs[idx];
      const auto t0 = std::chrono::steady_clock::now();
      const Volume den = method.run(pair.noisy);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      const auto da = den.data(), ca = pair.clean.data();
      for (size_t i = 0; i < da.size(); ++i) {
        const double d = static_cast<double>(da[i]) - ca[i];
        sq_sum += d * d;
      }
      px += da.size();
      tv_sum += temporal_variation(den);
      phantoms += phantom_events(den, pair.clean, theta_int, rc.theta_area);
    }

    MethodMetrics mm;
    mm.mse = sq_sum / static_cast<double>(px) * 1000.0;
    mm.temporal_variation = tv_sum / static_cast<double>(ds.test_indices.size());
    mm.phantom_events = phantoms;
    mm.runtime_seconds = seconds / static_cast<double>(ds.test_indices.size());
    report.methods.emplace_back(method.name, mm);
    std::printf("%-10s  mse %.4f  tv %.5f  phantoms %llu  %.2fs/vol\n", method.name.c_str(),
                mm.mse, mm.temporal_variation,
                static_cast<unsigned long long>(mm.phantom_events), mm.runtime_seconds);
    std::fflush(stdout);
  }

  ensure_dir(out_dir);
  echo_config(rc, out_dir);
  write_text(fs::path(out_dir) / "metrics.json", report_json(report, false).dump(2) + "\n");
  write_text(fs::path(out_dir) / "timings.json", report_json(report, true).dump(2) + "\n");
  write_text(fs::path(out_dir) / "report.txt", report_table(report));
  std::cout << report_table(report);
  return 0;
}

// ---------------------------------------------------------------------------
// export

int cmd_export(const std::string& in_vol, const std::string& out_dir) {
  const Volume v = read_vol(in_vol);
  export_frames_pgm(v, out_dir);
  std::cout << "wrote " << v.dims().t << " frames to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tri-planar space-time volume denoiser"};
  app.require_subcommand(1);

  CommonOpts gen_o, train_o, den_o, bench_o;
  std::string gen_out, train_dataset, train_out;
  std::string den_model, den_in, den_out, den_mode = "triplanar", den_pgm;
  std::string bench_dataset, bench_model, bench_out;
  std::string export_in, export_out;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common_options(gen, gen_o);
  gen->add_option("--out", gen_out, "output dataset directory")->required();

  CLI::App* train = app.add_subcommand("train", "train per-plane models");
  add_common_options(train, train_o);
  train->add_option("--dataset", train_dataset, "dataset directory")->required();
  train->add_option("--out", train_out, "model output directory")->required();

  CLI::App* den = app.add_subcommand("denoise", "denoise one volume file");
  add_common_options(den, den_o);
  den->add_option("--model", den_model, "model directory (neural modes)");
  den->add_option("--in", den_in, "input .vol")->required();
  den->add_option("--out", den_out, "output .vol")->required();
  den->add_option("--mode", den_mode, "xy|triplanar|gaussian|bilateral|nlm");
  den->add_option("--export-pgm", den_pgm, "also write per-frame PGMs here");

  CLI::App* bench = app.add_subcommand("bench", "run the benchmark table");
  add_common_options(bench, bench_o);
  bench->add_option("--dataset", bench_dataset, "dataset directory")->required();
  bench->add_option("--model", bench_model, "model directory (neural methods)");
  bench->add_option("--out", bench_out, "report output directory")->required();

  CLI::App* exp = app.add_subcommand("export", "write a .vol as PGM frames");
  exp->add_option("--in", export_in, "input .vol")->required();
  exp->add_option("--out", export_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_o, gen_out);
    if (train->parsed()) return cmd_train(train_o, train_dataset, train_out);
    if (den->parsed())
      return cmd_denoise(den_o, den_model, den_in, den_out, den_mode, den_pgm);
    if (bench->parsed()) return cmd_bench(bench_o, bench_dataset, bench_model, bench_out);
    if (exp->parsed()) return cmd_export(export_in, export_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
