#include "triplane/synthesis.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "triplane/errors.hpp"
#include "triplane/filters.hpp"
#include "triplane/nn/checkpoint.hpp"
#include "triplane/nn/ops.hpp"
#include "triplane/rng.hpp"
#include "triplane/threads.hpp"

namespace triplane {

uint64_t axis_seed(uint64_t base, SliceAxis axis) {
  switch (axis) {
    case SliceAxis::XY: return derive_seed(base, 0xA110);
    case SliceAxis::XT: return derive_seed(base, 0xA220);
    case SliceAxis::YT: return derive_seed(base, 0xA330);
  }
  throw std::invalid_argument("axis_seed: invalid axis");
}

namespace {

Image mirror_pad(const Image& img, uint32_t top, uint32_t bottom, uint32_t left,
                 uint32_t right) {
  Image out(img.rows + top + bottom, img.cols + left + right);
  const int rows = static_cast<int>(img.rows), cols = static_cast<int>(img.cols);
  for (uint32_t y = 0; y < out.rows; ++y) {
    const int sy = mirror_index(static_cast<int>(y) - static_cast<int>(top), rows);
    const float* src = img.row(static_cast<uint32_t>(sy));
    float* dst = out.row(y);
    for (uint32_t x = 0; x < out.cols; ++x)
      dst[x] = src[mirror_index(static_cast<int>(x) - static_cast<int>(left), cols)];
  }
  return out;
}

// Smallest per-axis padded size >= n the network can process whose output
// covers n. Throws if no size within a generous margin works.
uint32_t padded_size(const nn::UNetConfig& cfg, uint32_t n) {
  uint32_t shrink = 0;
  if (cfg.padding == nn::Padding::Valid) {
    shrink = 16;  // depth-1 valid-mode total shrink; doubles-plus-8 per level
    for (uint32_t d = 1; d < cfg.depth; ++d) shrink = 2 * shrink + 8;
  }
  for (uint32_t cand = n + shrink; cand <= n + shrink + 4 * (1u << cfg.depth) + 64; ++cand) {
    try {
      const auto [oh, ow] = output_dims(cfg, cand, cand);
      (void)ow;
      if (oh >= n) return cand;
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::invalid_argument("unet: no processable padded size for slice side " +
                              std::to_string(n));
}

void require_cubic(const Dims& d, const char* what) {
  if (d.t != d.h || d.h != d.w)
    throw std::invalid_argument(std::string(what) + ": requires cubic volumes, got " +
                                to_string(d));
}

// The three plane models carry distinct derived seeds, so equality of the
// architecture fields is what "identical configs" means here.
bool same_arch(const nn::UNetConfig& a, const nn::UNetConfig& b) {
  return a.depth == b.depth && a.base_channels == b.base_channels && a.padding == b.padding &&
         a.tile == b.tile;
}

}  // namespace

Image denoise_image(const nn::UNet<float>& net, const Image& img) {
  const nn::UNetConfig& cfg = net.config();
  const uint32_t ph = padded_size(cfg, img.rows);
  const uint32_t pw = padded_size(cfg, img.cols);

  nn::Tensor<float> x;
  if (ph == img.rows && pw == img.cols) {
    x = nn::from_image<float>(img);
  } else {
    const uint32_t top = (ph - img.rows) / 2, left = (pw - img.cols) / 2;
    x = nn::from_image<float>(
        mirror_pad(img, top, ph - img.rows - top, left, pw - img.cols - left));
  }

  thread_local nn::Workspace<float> ws;
  net.forward(x, ws);

  nn::Tensor<float> out;
  const nn::Tensor<float>* res = &ws.out;
  if (ws.out.h != img.rows || ws.out.w != img.cols) {
    nn::center_crop(ws.out, img.rows, img.cols, out);
    res = &out;
  }
  return nn::to_image(*res);
}

Volume denoise_single_plane(const SliceFn& fn, const Volume& v, SliceAxis axis) {
  SliceStack stack = slice(v, axis);
  parallel_for(stack.images.size(), [&](size_t i) {
    Image r = fn(stack.images[i]);
    for (float& p : r.pixels) p = std::clamp(p, 0.0f, 1.0f);
    stack.images[i] = std::move(r);
  });
  return reassemble(stack);
}

Volume denoise_single_plane(const PlaneModel& m, const Volume& v, SliceAxis axis) {
  if (m.axis != axis)
    throw std::invalid_argument(std::string("denoise_single_plane: model trained for ") +
                                to_string(m.axis) + " applied to " + to_string(axis));
  return denoise_single_plane(
      [&m](const Image& img) { return denoise_image(m.net, img); }, v, axis);
}

std::vector<nn::TrainSample> SlicePairs::samples() const {
  std::vector<nn::TrainSample> s(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) s[i] = {&inputs[i], &targets[i]};
  return s;
}

SlicePairs make_slice_pairs(const Dataset& ds, std::span<const size_t> indices,
                            SliceAxis axis) {
  SlicePairs out;
  for (size_t idx : indices) {
    if (idx >= ds.pairs.size())
      throw std::invalid_argument("make_slice_pairs: index " + std::to_string(idx) +
                                  " out of range");
    SliceStack noisy = slice(ds.pairs[idx].noisy, axis);
    SliceStack clean = slice(ds.pairs[idx].clean, axis);
    std::move(noisy.images.begin(), noisy.images.end(), std::back_inserter(out.inputs));
    std::move(clean.images.begin(), clean.images.end(), std::back_inserter(out.targets));
  }
  return out;
}

PlaneModel train_plane(const Dataset& ds, SliceAxis axis, nn::UNetConfig cfg,
                       nn::TrainConfig tc, const nn::EpochCallback& on_epoch) {
  if (ds.pairs.empty()) throw std::invalid_argument("train_plane: empty dataset");
  cfg.seed = axis_seed(cfg.seed, axis);
  tc.shuffle_seed = axis_seed(tc.shuffle_seed, axis);
  tc.axis_tag = to_string(axis);

  PlaneModel pm{nn::UNet<float>(cfg), axis};
  const SlicePairs pairs = make_slice_pairs(ds, ds.train_indices, axis);
  const auto samples = pairs.samples();
  nn::train(pm.net, samples, tc, on_epoch);
  return pm;
}

TriPlanarModel train_triplanar(const Dataset& ds, const nn::UNetConfig& cfg,
                               const nn::TrainConfig& tc,
                               const PlaneEpochCallback& on_epoch) {
  if (ds.pairs.empty()) throw std::invalid_argument("train_triplanar: empty dataset");
  for (const auto& p : ds.pairs) require_cubic(p.clean.dims(), "train_triplanar");

  auto run = [&](SliceAxis axis) {
    nn::EpochCallback cb;
    if (on_epoch)
      cb = [&on_epoch, axis](uint32_t epoch, double loss) { on_epoch(axis, epoch, loss); };
    return train_plane(ds, axis, cfg, tc, cb);
  };
  return {run(SliceAxis::XY), run(SliceAxis::XT), run(SliceAxis::YT)};
}

Volume denoise_triplanar(const TriPlanarModel& tm, const Volume& v) {
  require_cubic(v.dims(), "denoise_triplanar");
  const Volume a = denoise_single_plane(tm.xy, v, SliceAxis::XY);
  const Volume b = denoise_single_plane(tm.xt, v, SliceAxis::XT);
  const Volume c = denoise_single_plane(tm.yt, v, SliceAxis::YT);
  return fuse_mean(a, b, c);
}

void save_triplanar(const TriPlanarModel& tm, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model dir " + dir.string() + ": " + ec.message());

  const auto save = [&](const PlaneModel& pm, const char* file) {
    nn::save_checkpoint(pm.net, {0, to_string(pm.axis), {}}, dir / file);
  };
  save(tm.xy, "model_xy.ckpt");
  save(tm.xt, "model_xt.ckpt");
  save(tm.yt, "model_yt.ckpt");

  const nlohmann::json manifest = {{"format", "triplane-model-v1"},
                                   {"planes",
                                    {{"xy", "model_xy.ckpt"},
                                     {"xt", "model_xt.ckpt"},
                                     {"yt", "model_yt.ckpt"}}}};
  std::ofstream os(dir / "triplanar.json", std::ios::binary);
  if (!os) throw IoError("cannot open " + (dir / "triplanar.json").string() + " for writing");
  os << manifest.dump(2) << '\n';
}

PlaneModel load_plane(const std::filesystem::path& checkpoint) {
  auto [net, meta] = nn::load_checkpoint(checkpoint);
  if (meta.axis.empty())
    throw IoError("'" + checkpoint.string() + "': checkpoint carries no slicing axis");
  const SliceAxis axis = axis_from_string(meta.axis);
  return {std::move(net), axis};
}

TriPlanarModel load_triplanar(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "triplanar.json";
  std::ifstream is(manifest_path, std::ios::binary);
  if (!is) throw IoError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }

  auto load = [&](const char* key, SliceAxis want) {
    std::string file;
    try {
      file = manifest.at("planes").at(key).get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError(manifest_path.string() + ": " + e.what());
    }
    PlaneModel pm = load_plane(dir / file);
    if (pm.axis != want)
      throw IoError(manifest_path.string() + ": plane '" + key +
                    "' points at a checkpoint tagged " + to_string(pm.axis));
    return pm;
  };
  TriPlanarModel tm{load("xy", SliceAxis::XY), load("xt", SliceAxis::XT),
                    load("yt", SliceAxis::YT)};

  if (!same_arch(tm.xy.net.config(), tm.xt.net.config()) ||
      !same_arch(tm.xt.net.config(), tm.yt.net.config()))
    throw IoError(manifest_path.string() + ": the three plane models disagree on config");
  return tm;
}

}  // namespace triplane
