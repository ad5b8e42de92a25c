#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "triplane/nn/train.hpp"
#include "triplane/nn/unet.hpp"
#include "triplane/scene.hpp"
#include "triplane/volume.hpp"

namespace triplane {

// Any per-slice image map can drive the pipeline; classical filters and
// hand-written stubs plug in exactly like trained models.
using SliceFn = std::function<Image(const Image&)>;

// Apply fn to every slice along `axis`, clamp to [0,1], reassemble.
Volume denoise_single_plane(const SliceFn& fn, const Volume& v, SliceAxis axis);

// A trained network bound to the slicing direction it was trained on.
struct PlaneModel {
  nn::UNet<float> net;
  SliceAxis axis;
};

// Throws std::invalid_argument when `axis` differs from m.axis or the slice
// shape is not processable by the network.
Volume denoise_single_plane(const PlaneModel& m, const Volume& v, SliceAxis axis);

// Runs one image through the network: mirror-pads in valid mode so the
// output matches the input size, converts, forwards, clamps.
Image denoise_image(const nn::UNet<float>& net, const Image& img);

struct TriPlanarModel {
  PlaneModel xy, xt, yt;
};

// Owning (noisy, clean) slice pairs of one axis over the listed volumes.
struct SlicePairs {
  std::vector<Image> inputs, targets;

  std::vector<nn::TrainSample> samples() const;
};

SlicePairs make_slice_pairs(const Dataset& ds, std::span<const size_t> indices,
                            SliceAxis axis);

// Per-plane sub-seed of a base seed; the xy/xt/yt models never share init or
// shuffle randomness.
uint64_t axis_seed(uint64_t base, SliceAxis axis);

// Trains one plane's model on the dataset's training split. The weight-init
// and shuffle seeds are re-derived per axis (axis_seed) so the three planes
// stay independent. tc.axis_tag is set from `axis`.
PlaneModel train_plane(const Dataset& ds, SliceAxis axis, nn::UNetConfig cfg,
                       nn::TrainConfig tc, const nn::EpochCallback& on_epoch = {});

using PlaneEpochCallback = std::function<void(SliceAxis, uint32_t epoch, double loss)>;

// All three planes in sequence (xy, xt, yt). Requires cubic volumes.
TriPlanarModel train_triplanar(const Dataset& ds, const nn::UNetConfig& cfg,
                               const nn::TrainConfig& tc,
                               const PlaneEpochCallback& on_epoch = {});

// fuse_mean of the three single-plane reconstructions. Requires cubic dims.
Volume denoise_triplanar(const TriPlanarModel& tm, const Volume& v);

// Persisted as model_xy.ckpt / model_xt.ckpt / model_yt.ckpt plus
// triplanar.json naming each axis.
void save_triplanar(const TriPlanarModel& tm, const std::filesystem::path& dir);
TriPlanarModel load_triplanar(const std::filesystem::path& dir);
PlaneModel load_plane(const std::filesystem::path& checkpoint);

}  // namespace triplane
