#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "triplane/volume.hpp"

namespace triplane {

// Explicit particle placement, used instead of random sampling when a spec
// carries a non-empty particle list.
struct SceneParticle {
  float y0 = 0.0f;         // initial center, sub-pixel coordinates
  float x0 = 0.0f;
  float vy = 0.0f;         // pixels / frame
  float vx = 0.0f;
  float radius = 2.0f;     // Gaussian blob sigma, pixels
  float intensity = 0.5f;  // peak height added on top of the background
};

struct SceneSpec {
  Dims dims{128, 128, 128};
  uint32_t n_particles = 30;
  float radius_min = 1.5f;
  float radius_max = 3.0f;
  float intensity_min = 0.3f;
  float intensity_max = 0.9f;
  float max_speed = 0.8f;      // per-component velocity bound, pixels/frame
  float jitter_sigma = 0.0f;   // Brownian per-frame displacement sigma
  float background = 0.1f;
  uint64_t seed = 0;
  std::vector<SceneParticle> particles;  // optional explicit placement
};

// Deterministic clean volume: additive Gaussian blobs moving with constant
// velocity (plus optional Brownian jitter), clamped to [0,1].
Volume render_scene(const SceneSpec& spec);

// out = clamp(v + N(0, sigma^2), 0, 1), i.i.d. per pixel.
Volume add_gaussian_noise(const Volume& v, float sigma, uint64_t seed);

// out = clamp(Poisson(v * lambda_max) / lambda_max, 0, 1), i.i.d. per pixel.
Volume add_poisson_noise(const Volume& v, float lambda_max, uint64_t seed);

enum class NoiseFamily { Gaussian, Poisson, Mixed };

const char* to_string(NoiseFamily f);
NoiseFamily noise_family_from_string(std::string_view s);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Mixed;
  float sigma = 0.1f;        // Gaussian std, intensity units
  float lambda_max = 10.0f;  // expected counts at intensity 1.0
  uint64_t seed = 0;
};

// Mixed applies Poisson first (shot noise), then Gaussian (readout), with
// sub-seeds derived from spec.seed.
Volume apply_noise(const Volume& v, const NoiseSpec& spec);

struct VolumePair {
  Volume noisy;
  Volume clean;
};

struct Dataset {
  std::vector<VolumePair> pairs;
  std::vector<size_t> train_indices;
  std::vector<size_t> test_indices;
  nlohmann::json manifest;
};

// Renders every scene, corrupts it with per-volume noise seeds derived from
// noise.seed, and splits train/test by a seeded shuffle. n_train is
// round(split_ratio * n).
Dataset make_dataset(const std::vector<SceneSpec>& scenes, const NoiseSpec& noise,
                     double split_ratio);

void to_json(nlohmann::json& j, const SceneParticle& p);
void from_json(const nlohmann::json& j, SceneParticle& p);
void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);
void to_json(nlohmann::json& j, const NoiseSpec& s);
void from_json(const nlohmann::json& j, NoiseSpec& s);

}  // namespace triplane
