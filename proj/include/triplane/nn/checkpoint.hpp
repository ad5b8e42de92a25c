#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "triplane/nn/unet.hpp"

namespace triplane::nn {

// Sidecar facts a checkpoint carries beyond the model itself: how many
// epochs finished, which slicing axis it serves (for tri-planar members),
// and the per-epoch loss history so a resumed run can reproduce the full
// training log.
struct CheckpointMeta {
  uint32_t epoch = 0;
  std::string axis;  // "xy" / "xt" / "yt", empty for standalone models
  std::vector<double> loss_history;

  bool operator==(const CheckpointMeta&) const = default;
};

// Binary container: magic "UNC1", version u32 LE, length-prefixed JSON
// (config, meta, per-layer shape table), then params / Adam-m / Adam-v as
// little-endian float32. Round-trips bit-exactly, including optimizer state.
void save_checkpoint(const UNet<float>& m, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

std::pair<UNet<float>, CheckpointMeta> load_checkpoint(const std::filesystem::path& path);

}  // namespace triplane::nn
