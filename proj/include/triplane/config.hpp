#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "triplane/nn/train.hpp"
#include "triplane/nn/unet.hpp"
#include "triplane/scene.hpp"

namespace triplane {

struct FilterParams {
  float gaussian_sigma = 1.0f;
  int gaussian_ksize = 5;
  float bilateral_sigma_s = 2.0f;
  float bilateral_sigma_r = 0.1f;
  int bilateral_ksize = 7;
  float nlm_h = 0.1f;
  int nlm_patch = 7;
  int nlm_window = 21;
};

// Resolved run configuration. JSON sections: scene / noise / unet / train /
// bench plus the global seed; every field is optional in the file and falls
// back to the defaults below. Unknown keys are rejected.
//
// All randomness flows from the global seed: scene i uses
// derive_seed(derive_seed(seed,1), i), the noise family stream uses
// derive_seed(seed,2), weight init derive_seed(seed,3) and the shuffle
// derive_seed(seed,4); per-axis streams are further split inside synthesis.
struct RunConfig {
  uint64_t seed = 0;

  // [scene]
  uint32_t volumes = 300;
  double split = 5.0 / 6.0;  // train fraction
  SceneSpec scene;           // its seed field is ignored; derived per volume

  // [noise]
  NoiseFamily noise_family = NoiseFamily::Mixed;
  float noise_sigma = 0.1f;
  float noise_lambda_max = 10.0f;

  // [unet]
  nn::UNetConfig unet;  // seed field ignored; derived

  // [train]
  nn::AdamConfig adam;
  uint32_t batch = 4;
  uint32_t epochs = 50;
  uint32_t checkpoint_every = 1;
  std::vector<SliceAxis> planes = {SliceAxis::XY, SliceAxis::XT, SliceAxis::YT};

  // [bench]
  FilterParams filters;
  float theta_int_factor = 0.3f;  // theta_int = bg + factor * (peak - bg)
  uint32_t theta_area = 4;
  std::vector<std::string> methods = {"noisy",  "unet-xy",  "triplanar",
                                      "nlm",    "gaussian", "bilateral"};

  uint64_t scene_seed(uint32_t volume_index) const;
  uint64_t noise_seed() const;
  uint64_t unet_seed() const;
  uint64_t shuffle_seed() const;

  // theta_int resolved against the configured scene's background/peak
  float theta_int() const;
};

// Defaults overlaid with the file's sections; throws ConfigError on unknown
// keys, malformed values, or an unreadable file.
RunConfig load_config(const std::filesystem::path& file);
void apply_json(RunConfig& rc, const nlohmann::json& j, const std::string& prefix = "");

// The fully resolved document (every field populated). Serializing it is
// byte-deterministic, which run echoes and hashes rely on.
nlohmann::json resolved_json(const RunConfig& rc);

// FNV-1a 64 over the compact dump, as fixed-width hex.
std::string config_hash(const nlohmann::json& j);

// Per-volume scene specs with derived seeds (shape shared, trajectories not).
std::vector<SceneSpec> make_scene_specs(const RunConfig& rc);

}  // namespace triplane
