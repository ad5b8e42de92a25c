#include "triplane/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "triplane/rng.hpp"

namespace triplane {

namespace {

void validate_spec(const SceneSpec& s) {
  if (s.dims.t == 0 || s.dims.h == 0 || s.dims.w == 0)
    throw std::invalid_argument("render_scene: dims must all be >= 1, got " + to_string(s.dims));
  if (s.background < 0.0f || s.background >= 1.0f)
    throw std::invalid_argument("render_scene: background must be in [0,1)");
  if (s.particles.empty() && s.n_particles > 0) {
    if (!(s.radius_min > 0.0f) || s.radius_max < s.radius_min)
      throw std::invalid_argument("render_scene: invalid radius range");
    if (!(s.intensity_min > 0.0f) || s.intensity_max < s.intensity_min ||
        s.intensity_max > 1.0f)
      throw std::invalid_argument("render_scene: intensity range must be within (0,1]");
    if (s.max_speed < 0.0f) throw std::invalid_argument("render_scene: negative max_speed");
  }
  for (const auto& p : s.particles) {
    if (!(p.radius > 0.0f)) throw std::invalid_argument("render_scene: particle radius must be > 0");
    if (!(p.intensity > 0.0f) || p.intensity > 1.0f)
      throw std::invalid_argument("render_scene: particle intensity must be in (0,1]");
  }
  if (s.jitter_sigma < 0.0f) throw std::invalid_argument("render_scene: negative jitter_sigma");
}

void add_blob(Image& frame, float cy, float cx, float radius, float intensity) {
  // evaluate within a +-4 sigma box; contributions beyond that are < 4e-4
  const float reach = 4.0f * radius;
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int y1 = std::min(static_cast<int>(frame.rows) - 1, static_cast<int>(std::ceil(cy + reach)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int x1 = std::min(static_cast<int>(frame.cols) - 1, static_cast<int>(std::ceil(cx + reach)));
  const float inv2s2 = 1.0f / (2.0f * radius * radius);
  for (int y = y0; y <= y1; ++y) {
    float* row = frame.row(static_cast<uint32_t>(y));
    const float dy2 = (y - cy) * (y - cy);
    for (int x = x0; x <= x1; ++x) {
      const float d2 = dy2 + (x - cx) * (x - cx);
      row[x] += intensity * std::exp(-d2 * inv2s2);
    }
  }
}

}  // namespace

Volume render_scene(const SceneSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);

  std::vector<SceneParticle> particles = spec.particles;
  if (particles.empty()) {
    particles.reserve(spec.n_particles);
    for (uint32_t i = 0; i < spec.n_particles; ++i) {
      SceneParticle p;
      p.y0 = static_cast<float>(rng.next_double() * spec.dims.h);
      p.x0 = static_cast<float>(rng.next_double() * spec.dims.w);
      p.vy = static_cast<float>((rng.next_double() * 2.0 - 1.0) * spec.max_speed);
      p.vx = static_cast<float>((rng.next_double() * 2.0 - 1.0) * spec.max_speed);
      p.radius = static_cast<float>(spec.radius_min +
                                    rng.next_double() * (spec.radius_max - spec.radius_min));
      p.intensity = static_cast<float>(
          spec.intensity_min + rng.next_double() * (spec.intensity_max - spec.intensity_min));
      particles.push_back(p);
    }
  }

  // per-particle trajectories, sampled particle-major so the stream layout
  // does not depend on frame iteration
  const uint32_t T = spec.dims.t;
  std::vector<float> cy(particles.size() * T), cx(particles.size() * T);
  for (size_t i = 0; i < particles.size(); ++i) {
    const auto& p = particles[i];
    double jy = 0.0, jx = 0.0;
    for (uint32_t t = 0; t < T; ++t) {
      if (spec.jitter_sigma > 0.0f && t > 0) {
        jy += rng.normal(0.0, spec.jitter_sigma);
        jx += rng.normal(0.0, spec.jitter_sigma);
      }
      cy[i * T + t] = static_cast<float>(p.y0 + static_cast<double>(p.vy) * t + jy);
      cx[i * T + t] = static_cast<float>(p.x0 + static_cast<double>(p.vx) * t + jx);
    }
  }

  Volume v(spec.dims, spec.background);
  Image frame(spec.dims.h, spec.dims.w);
  for (uint32_t t = 0; t < T; ++t) {
    std::fill(frame.pixels.begin(), frame.pixels.end(), spec.background);
    for (size_t i = 0; i < particles.size(); ++i)
      add_blob(frame, cy[i * T + t], cx[i * T + t], particles[i].radius, particles[i].intensity);
    float* dst = v.frame_ptr(t);
    for (size_t k = 0; k < frame.size(); ++k) dst[k] = std::clamp(frame.pixels[k], 0.0f, 1.0f);
  }
  return v;
}

Volume add_gaussian_noise(const Volume& v, float sigma, uint64_t seed) {
  if (!(sigma > 0.0f)) throw std::invalid_argument("add_gaussian_noise: sigma must be > 0");
  Rng rng(seed);
  Volume out(v.dims());
  const auto src = v.data();
  auto dst = out.data();
  for (size_t i = 0; i < src.size(); ++i) {
    const double noisy = src[i] + rng.normal(0.0, sigma);
    dst[i] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
  }
  return out;
}

Volume add_poisson_noise(const Volume& v, float lambda_max, uint64_t seed) {
  if (!(lambda_max > 0.0f))
    throw std::invalid_argument("add_poisson_noise: lambda_max must be > 0");
  Rng rng(seed);
  Volume out(v.dims());
  const auto src = v.data();
  auto dst = out.data();
  const double k = static_cast<double>(lambda_max);
  for (size_t i = 0; i < src.size(); ++i) {
    const double lambda = std::max(0.0, static_cast<double>(src[i])) * k;
    const double counts = static_cast<double>(rng.poisson(lambda));
    dst[i] = static_cast<float>(std::clamp(counts / k, 0.0, 1.0));
  }
  return out;
}

const char* to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::Gaussian: return "gaussian";
    case NoiseFamily::Poisson: return "poisson";
    case NoiseFamily::Mixed: return "mixed";
  }
  return "?";
}

NoiseFamily noise_family_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseFamily::Gaussian;
  if (s == "poisson") return NoiseFamily::Poisson;
  if (s == "mixed") return NoiseFamily::Mixed;
  throw std::invalid_argument("unknown noise family '" + std::string(s) +
                              "' (expected gaussian, poisson or mixed)");
}

Volume apply_noise(const Volume& v, const NoiseSpec& spec) {
  switch (spec.family) {
    case NoiseFamily::Gaussian:
      return add_gaussian_noise(v, spec.sigma, spec.seed);
    case NoiseFamily::Poisson:
      return add_poisson_noise(v, spec.lambda_max, spec.seed);
    case NoiseFamily::Mixed: {
      Volume shot = add_poisson_noise(v, spec.lambda_max, derive_seed(spec.seed, 1));
      return add_gaussian_noise(shot, spec.sigma, derive_seed(spec.seed, 2));
    }
  }
  throw std::invalid_argument("apply_noise: invalid noise family");
}

Dataset make_dataset(const std::vector<SceneSpec>& scenes, const NoiseSpec& noise,
                     double split_ratio) {
  if (scenes.empty()) throw std::invalid_argument("make_dataset: empty scene list");
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw std::invalid_argument("make_dataset: split_ratio must be in (0,1)");

  Dataset ds;
  ds.pairs.reserve(scenes.size());
  nlohmann::json vols = nlohmann::json::array();
  for (size_t i = 0; i < scenes.size(); ++i) {
    const uint64_t noise_seed = derive_seed(noise.seed, i);
    Volume clean = render_scene(scenes[i]);
    NoiseSpec per_volume = noise;
    per_volume.seed = noise_seed;
    Volume noisy = apply_noise(clean, per_volume);
    ds.pairs.push_back({std::move(noisy), std::move(clean)});

    char clean_name[32], noisy_name[32];
    std::snprintf(clean_name, sizeof(clean_name), "clean_%04zu.vol", i);
    std::snprintf(noisy_name, sizeof(noisy_name), "noisy_%04zu.vol", i);
    vols.push_back({{"index", i},
                    {"clean", clean_name},
                    {"noisy", noisy_name},
                    {"noise_seed", noise_seed}});
  }

  // seeded shuffle, then the first n_train indices are the training split
  const size_t n = scenes.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(noise.seed, 0xD5A7A5E7ull));
  for (size_t i = n - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng.next_u64() % (i + 1));
    std::swap(order[i], order[j]);
  }
  size_t n_train = static_cast<size_t>(std::llround(split_ratio * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  ds.train_indices.assign(order.begin(), order.begin() + n_train);
  ds.test_indices.assign(order.begin() + n_train, order.end());
  std::sort(ds.train_indices.begin(), ds.train_indices.end());
  std::sort(ds.test_indices.begin(), ds.test_indices.end());

  ds.manifest = {{"format", "triplane-dataset-v1"},
                 {"scenes", scenes},
                 {"noise", noise},
                 {"split_ratio", split_ratio},
                 {"volumes", std::move(vols)},
                 {"train", ds.train_indices},
                 {"test", ds.test_indices}};
  return ds;
}

void to_json(nlohmann::json& j, const SceneParticle& p) {
  j = {{"y0", p.y0},         {"x0", p.x0},
       {"vy", p.vy},         {"vx", p.vx},
       {"radius", p.radius}, {"intensity", p.intensity}};
}

void from_json(const nlohmann::json& j, SceneParticle& p) {
  j.at("y0").get_to(p.y0);
  j.at("x0").get_to(p.x0);
  j.at("vy").get_to(p.vy);
  j.at("vx").get_to(p.vx);
  j.at("radius").get_to(p.radius);
  j.at("intensity").get_to(p.intensity);
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
  j = {{"dims", {s.dims.t, s.dims.h, s.dims.w}},
       {"particles", s.n_particles},
       {"radius", {s.radius_min, s.radius_max}},
       {"intensity", {s.intensity_min, s.intensity_max}},
       {"max_speed", s.max_speed},
       {"jitter", s.jitter_sigma},
       {"background", s.background},
       {"seed", s.seed}};
  if (!s.particles.empty()) j["placed_particles"] = s.particles;
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
  const auto& d = j.at("dims");
  s.dims = {d.at(0).get<uint32_t>(), d.at(1).get<uint32_t>(), d.at(2).get<uint32_t>()};
  j.at("particles").get_to(s.n_particles);
  j.at("radius").at(0).get_to(s.radius_min);
  j.at("radius").at(1).get_to(s.radius_max);
  j.at("intensity").at(0).get_to(s.intensity_min);
  j.at("intensity").at(1).get_to(s.intensity_max);
  j.at("max_speed").get_to(s.max_speed);
  j.at("jitter").get_to(s.jitter_sigma);
  j.at("background").get_to(s.background);
  j.at("seed").get_to(s.seed);
  if (j.contains("placed_particles")) j.at("placed_particles").get_to(s.particles);
}

void to_json(nlohmann::json& j, const NoiseSpec& s) {
  j = {{"family", to_string(s.family)},
       {"sigma", s.sigma},
       {"lambda_max", s.lambda_max},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, NoiseSpec& s) {
  s.family = noise_family_from_string(j.at("family").get<std::string>());
  j.at("sigma").get_to(s.sigma);
  j.at("lambda_max").get_to(s.lambda_max);
  j.at("seed").get_to(s.seed);
}

}  // namespace triplane
