#include "doctest.h"
#include "mflq/philox.hpp"

#include <cmath>

using namespace mflq;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                             K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                             K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws depend only on (seed, path, step, purpose)") {
  const CounterRng a(42), b(42), c(43);
  CHECK(a.normal(7, 3, 0) == b.normal(7, 3, 0));
  CHECK(a.normal(7, 3, 0) != c.normal(7, 3, 0));
  CHECK(a.normal(7, 3, 0) != a.normal(7, 3, 1));
  CHECK(a.normal(7, 3, 0) != a.normal(8, 3, 0));
  CHECK(a.normal(1ull << 33, 3, 0) != a.normal(0, 3, 0));
}

TEST_CASE("uniform and normal moments") {
  const CounterRng rng(1);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0, sn4 = 0.0;
  for (int p = 0; p < n; ++p) {
    const auto u = rng.uniforms(static_cast<std::uint64_t>(p), 0, 5);
    CHECK_UNARY(u[0] >= 0.0 && u[0] < 1.0);
    su += u[0] + u[1];
    const double z = rng.normal(static_cast<std::uint64_t>(p), 1, 0);
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(su / (2 * n) == doctest::Approx(0.5).epsilon(0.005));
  CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("Poisson inversion") {
  CHECK(CounterRng::poisson_from_uniform(0.0, 0.5) == 0);
  CHECK(CounterRng::poisson_from_uniform(std::exp(-0.5) * 0.999, 0.5) == 0);
  CHECK(CounterRng::poisson_from_uniform(std::exp(-0.5) * 1.001, 0.5) == 1);
  CHECK(CounterRng::poisson_from_uniform(0.5, 0.0) == 0);

  const CounterRng rng(9);
  const int n = 200000;
  const double mean = 1.3;
  double s = 0.0, s2 = 0.0;
  for (int p = 0; p < n; ++p) {
    const double k = rng.poisson(static_cast<std::uint64_t>(p), 0, 1, mean);
    s += k;
    s2 += k * k;
  }
  const double m = s / n;
  CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
  CHECK(s2 / n - m * m == doctest::Approx(mean).epsilon(0.03));
}
