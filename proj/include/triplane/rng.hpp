#pragma once

#include <cstdint>

namespace triplane {

// splitmix64 finalizer; also used to derive independent stream seeds.
uint64_t splitmix64(uint64_t& state);

// Deterministic seed for sub-stream `salt` of a base seed (per-volume noise,
// per-layer init, per-epoch shuffles).
uint64_t derive_seed(uint64_t base, uint64_t salt);

// xoshiro256++ with splitmix64 seeding. Fixed in the repo so datasets and
// training runs reproduce across platforms; the Gaussian/Poisson transforms
// below call into libm, so bit-exactness holds per platform/libm build.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // uniform in [0, 1), 53-bit resolution
  double next_double();

  // standard normal via Box-Muller (second value of each pair is cached)
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Poisson sample: product-of-uniforms inversion for lambda < 10,
  // PTRS transformed rejection (Hormann 1993) for lambda >= 10.
  uint64_t poisson(double lambda);

 private:
  uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace triplane
