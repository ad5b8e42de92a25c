#include "triplane/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "triplane/errors.hpp"
#include "triplane/rng.hpp"

namespace triplane {

uint64_t RunConfig::scene_seed(uint32_t volume_index) const {
  return derive_seed(derive_seed(seed, 1), volume_index);
}
uint64_t RunConfig::noise_seed() const { return derive_seed(seed, 2); }
uint64_t RunConfig::unet_seed() const { return derive_seed(seed, 3); }
uint64_t RunConfig::shuffle_seed() const { return derive_seed(seed, 4); }

float RunConfig::theta_int() const {
  const float peak = std::min(1.0f, scene.background + scene.intensity_max);
  return scene.background + theta_int_factor * (peak - scene.background);
}

namespace {

// Every getter funnels through here so unknown keys and type errors surface
// as ConfigError with a full key path.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  ~Section() = default;

  template <typename T>
  void get(const char* key, T& out) {
    mark(key);
    if (!j_.contains(key)) return;
    try {
      j_.at(key).get_to(out);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: bad value for '" + path_ + key + "': " + e.what());
    }
  }

  bool has(const char* key) {
    mark(key);
    return j_.contains(key);
  }

  const nlohmann::json& at(const char* key) const { return j_.at(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ConfigError("config: unknown key '" + path_ + it.key() + "'");
  }

  std::string child_path(const char* key) const { return path_ + key + "."; }

 private:
  void mark(const char* key) { seen_.emplace_back(key); }

  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

SliceAxis axis_from_json(const nlohmann::json& j, const std::string& path) {
  try {
    return axis_from_string(j.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError("config: bad value for '" + path + "': " + e.what());
  }
}

}  // namespace

void apply_json(RunConfig& rc, const nlohmann::json& j, const std::string& prefix) {
  Section root(j, prefix);
  root.get("seed", rc.seed);

  if (root.has("scene")) {
    Section s(root.at("scene"), root.child_path("scene"));
    s.get("volumes", rc.volumes);
    s.get("split", rc.split);
    if (s.has("dims")) {
      const auto& d = s.at("dims");
      if (!d.is_array() || d.size() != 3)
        throw ConfigError("config: 'scene.dims' must be [t, h, w]");
      try {
        rc.scene.dims = {d.at(0).get<uint32_t>(), d.at(1).get<uint32_t>(),
                         d.at(2).get<uint32_t>()};
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for 'scene.dims': ") + e.what());
      }
    }
    s.get("particles", rc.scene.n_particles);
    s.get("radius_min", rc.scene.radius_min);
    s.get("radius_max", rc.scene.radius_max);
    s.get("intensity_min", rc.scene.intensity_min);
    s.get("intensity_max", rc.scene.intensity_max);
    s.get("max_speed", rc.scene.max_speed);
    s.get("jitter", rc.scene.jitter_sigma);
    s.get("background", rc.scene.background);
    s.finish();
  }

  if (root.has("noise")) {
    Section s(root.at("noise"), root.child_path("noise"));
    if (s.has("family"))
      rc.noise_family = [&] {
        try {
          return noise_family_from_string(s.at("family").get<std::string>());
        } catch (const std::exception& e) {
          throw ConfigError(std::string("config: bad value for 'noise.family': ") + e.what());
        }
      }();
    s.get("sigma", rc.noise_sigma);
    s.get("lambda_max", rc.noise_lambda_max);
    s.finish();
  }

  if (root.has("unet")) {
    Section s(root.at("unet"), root.child_path("unet"));
    s.get("depth", rc.unet.depth);
    s.get("base_channels", rc.unet.base_channels);
    if (s.has("padding")) {
      try {
        rc.unet.padding = nn::padding_from_string(s.at("padding").get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: bad value for 'unet.padding': ") + e.what());
      }
    }
    s.get("tile", rc.unet.tile);
    s.finish();
  }

  if (root.has("train")) {
    Section s(root.at("train"), root.child_path("train"));
    s.get("lr", rc.adam.lr);
    s.get("beta1", rc.adam.beta1);
    s.get("beta2", rc.adam.beta2);
    s.get("eps", rc.adam.eps);
    s.get("batch", rc.batch);
    s.get("epochs", rc.epochs);
    s.get("checkpoint_every", rc.checkpoint_every);
    if (s.has("planes")) {
      const auto& planes = s.at("planes");
      if (!planes.is_array() || planes.empty())
        throw ConfigError("config: 'train.planes' must be a non-empty array");
      rc.planes.clear();
      for (const auto& p : planes)
        rc.planes.push_back(axis_from_json(p, "train.planes"));
    }
    s.finish();
  }

  if (root.has("bench")) {
    Section s(root.at("bench"), root.child_path("bench"));
    if (s.has("gaussian")) {
      Section f(s.at("gaussian"), s.child_path("gaussian"));
      f.get("sigma", rc.filters.gaussian_sigma);
      f.get("ksize", rc.filters.gaussian_ksize);
      f.finish();
    }
    if (s.has("bilateral")) {
      Section f(s.at("bilateral"), s.child_path("bilateral"));
      f.get("sigma_s", rc.filters.bilateral_sigma_s);
      f.get("sigma_r", rc.filters.bilateral_sigma_r);
      f.get("ksize", rc.filters.bilateral_ksize);
      f.finish();
    }
    if (s.has("nlm")) {
      Section f(s.at("nlm"), s.child_path("nlm"));
      f.get("h", rc.filters.nlm_h);
      f.get("patch", rc.filters.nlm_patch);
      f.get("window", rc.filters.nlm_window);
      f.finish();
    }
    s.get("theta_int_factor", rc.theta_int_factor);
    s.get("theta_area", rc.theta_area);
    s.get("methods", rc.methods);
    s.finish();
  }

  root.finish();

  if (rc.volumes < 1) throw ConfigError("config: scene.volumes must be >= 1");
  if (!(rc.split > 0.0 && rc.split < 1.0))
    throw ConfigError("config: scene.split must lie in (0,1)");
  if (rc.epochs > 0 && rc.batch < 1) throw ConfigError("config: train.batch must be >= 1");
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ConfigError("config: cannot open '" + file.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: '" + file.string() + "': " + e.what());
  }
  RunConfig rc;
  apply_json(rc, j);
  return rc;
}

nlohmann::json resolved_json(const RunConfig& rc) {
  nlohmann::json planes = nlohmann::json::array();
  for (SliceAxis a : rc.planes) planes.push_back(to_string(a));
  return {
      {"seed", rc.seed},
      {"scene",
       {{"volumes", rc.volumes},
        {"split", rc.split},
        {"dims", {rc.scene.dims.t, rc.scene.dims.h, rc.scene.dims.w}},
        {"particles", rc.scene.n_particles},
        {"radius_min", rc.scene.radius_min},
        {"radius_max", rc.scene.radius_max},
        {"intensity_min", rc.scene.intensity_min},
        {"intensity_max", rc.scene.intensity_max},
        {"max_speed", rc.scene.max_speed},
        {"jitter", rc.scene.jitter_sigma},
        {"background", rc.scene.background}}},
      {"noise",
       {{"family", to_string(rc.noise_family)},
        {"sigma", rc.noise_sigma},
        {"lambda_max", rc.noise_lambda_max}}},
      {"unet",
       {{"depth", rc.unet.depth},
        {"base_channels", rc.unet.base_channels},
        {"padding", to_string(rc.unet.padding)},
        {"tile", rc.unet.tile}}},
      {"train",
       {{"lr", rc.adam.lr},
        {"beta1", rc.adam.beta1},
        {"beta2", rc.adam.beta2},
        {"eps", rc.adam.eps},
        {"batch", rc.batch},
        {"epochs", rc.epochs},
        {"checkpoint_every", rc.checkpoint_every},
        {"planes", std::move(planes)}}},
      {"bench",
       {{"gaussian",
         {{"sigma", rc.filters.gaussian_sigma}, {"ksize", rc.filters.gaussian_ksize}}},
        {"bilateral",
         {{"sigma_s", rc.filters.bilateral_sigma_s},
          {"sigma_r", rc.filters.bilateral_sigma_r},
          {"ksize", rc.filters.bilateral_ksize}}},
        {"nlm",
         {{"h", rc.filters.nlm_h},
          {"patch", rc.filters.nlm_patch},
          {"window", rc.filters.nlm_window}}},
        {"theta_int_factor", rc.theta_int_factor},
        {"theta_area", rc.theta_area},
        {"methods", rc.methods}}}};
}

std::string config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<SceneSpec> make_scene_specs(const RunConfig& rc) {
  std::vector<SceneSpec> specs(rc.volumes, rc.scene);
  for (uint32_t i = 0; i < rc.volumes; ++i) specs[i].seed = rc.scene_seed(i);
  return specs;
}

}  // namespace triplane
