#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "triplane/rng.hpp"

using namespace triplane;

TEST_CASE("identical seeds give identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
  Rng a(123), b(124);
  int same = 0;
  for (int i = 0; i < 100; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("derive_seed separates sub-streams and is deterministic") {
  CHECK(derive_seed(42, 1) == derive_seed(42, 1));
  CHECK(derive_seed(42, 1) != derive_seed(42, 2));
  CHECK(derive_seed(42, 1) != derive_seed(43, 1));
  // the derived stream and base stream should not coincide
  Rng base(42), derived(derive_seed(42, 1));
  CHECK(base.next_u64() != derived.next_u64());
}

TEST_CASE("next_double stays in the half-open unit interval") {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform moments match within sampling error") {
  Rng rng(11);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // std of the sample mean is 1/sqrt(12 n) ~ 2.9e-4; allow 5 sigma
  CHECK(std::abs(mean - 0.5) < 5.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(var - 1.0 / 12.0) < 0.001);
}

TEST_CASE("normal samples have the requested mean and sigma") {
  Rng rng(13);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(2.0, 3.0);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 2.0) < 5.0 * 3.0 / std::sqrt(n));  // 5 sigma of the mean
  CHECK(std::abs(var - 9.0) < 0.1);
}

TEST_CASE("poisson matches mean and variance across both sampler regimes") {
  // lambda < 10 uses inversion, lambda >= 10 the rejection sampler; both
  // must deliver E[X] = Var[X] = lambda.
  for (double lambda : {0.5, 3.0, 9.9, 10.0, 25.0, 200.0}) {
    Rng rng(static_cast<uint64_t>(lambda * 1000) + 17);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(lambda));
      sum += x;
      sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CAPTURE(lambda);
    CHECK(std::abs(mean - lambda) < 5.0 * std::sqrt(lambda / n));
    CHECK(std::abs(var - lambda) / lambda < 0.05);
  }
}

TEST_CASE("poisson of lambda zero is identically zero") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("splitmix64 sequence is reproducible") {
  uint64_t s1 = 99, s2 = 99;
  for (int i = 0; i < 10; ++i) CHECK(splitmix64(s1) == splitmix64(s2));
  CHECK(s1 == s2);
}
