// Unit tests for the theta evaluator and the guarded parameter sampler.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ellqg/theta.hpp"

using namespace ellqg;

namespace {

LatticeParams lat(double re, double im) {
  LatticeParams l;
  l.tau = cplx{re, im};
  return l;
}

}  // namespace

TEST_CASE("theta is odd") {
  const LatticeParams l = lat(0.21, 0.83);
  Rng rng(11);
  for (int i = 0; i < 25; ++i) {
    const cplx z = rng.box(-2.0, 2.0, -2.0, 2.0);
    CHECK(std::abs(theta(-z, l) + theta(z, l)) < 1e-12 * (1.0 + std::abs(theta(z, l))));
  }
}

TEST_CASE("quasi-periodicity over the lattice") {
  const LatticeParams l = lat(-0.13, 0.71);
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const cplx z = rng.box(-0.5, 0.5, -0.3, 0.3);
    const cplx base = theta(z, l);
    for (int r = -3; r <= 3; ++r)
      for (int s = -3; s <= 3; ++s) {
        const cplx shifted = theta(z + static_cast<double>(r) +
                                       static_cast<double>(s) * l.tau, l);
        const cplx predicted = quasi_period_multiplier(z, r, s, l) * base;
        CHECK(std::abs(shifted - predicted) < 1e-10 * (1.0 + std::abs(predicted)));
      }
  }
}

TEST_CASE("truncation order is already saturated at the default") {
  LatticeParams a = lat(0.05, 0.5);  // worst case: smallest Im tau we use
  LatticeParams b = a;
  b.truncation_order = 2 * a.truncation_order;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const cplx z = rng.box(-0.5, 0.5, -0.25, 0.25);
    CHECK(std::abs(theta(z, a) - theta(z, b)) < 1e-12);
  }
}

TEST_CASE("derivative at zero equals one") {
  for (double im : {0.5, 0.9, 1.7}) {
    const cplx d = theta_derivative_at_zero(lat(0.1, im));
    CHECK(std::abs(d - 1.0) < 1e-8);
  }
}

TEST_CASE("zeros exactly on the lattice") {
  const LatticeParams l = lat(0.3, 1.1);
  for (int r = -2; r <= 2; ++r)
    for (int s = -2; s <= 2; ++s) {
      const cplx z = static_cast<double>(r) + static_cast<double>(s) * l.tau;
      CHECK(std::abs(theta(z, l)) < 1e-10);
    }
  // and nowhere nearby
  CHECK(std::abs(theta(cplx{0.5, 0.0}, l)) > 0.1);
  CHECK(std::abs(theta(0.5 * l.tau, l)) > 0.05);
}

TEST_CASE("multiplier composes additively in r and s") {
  const LatticeParams l = lat(-0.2, 0.9);
  const cplx z{0.17, -0.21};
  // M(z, r1+r2, s1+s2) = M(z + r1 + s1 tau, r2, s2) * M(z, r1, s1)
  const cplx lhs = quasi_period_multiplier(z, 3, -1, l);
  const cplx mid = z + 1.0 + 1.0 * l.tau;
  const cplx rhs = quasi_period_multiplier(mid, 2, -2, l) *
                   quasi_period_multiplier(z, 1, 1, l);
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
}

TEST_CASE("rng streams are deterministic and label-separated") {
  Rng a(42), b(42), c(43);
  bool identical = true, distinct = false;
  for (int i = 0; i < 50; ++i) {
    const double x = a.unit();
    identical = identical && (x == b.unit());
    distinct = distinct || (x != c.unit());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(identical);
  CHECK(distinct);

  const std::uint64_t m = 1234567;
  CHECK(derive_seed(m, "alpha") == derive_seed(m, "alpha"));
  CHECK(derive_seed(m, "alpha") != derive_seed(m, "beta"));
  CHECK(derive_seed(m, "alpha") != derive_seed(m + 1, "alpha"));
}

TEST_CASE("sampled parameters satisfy every guard") {
  const int n = 4;
  const SampleOptions opt;
  const EllipticParams p = sample_generic_params(n, 991, opt);
  REQUIRE(p.n() == n);

  auto mag = [&](cplx arg) { return std::abs(theta(arg, p.lattice)); };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      for (int s = -n; s <= n; ++s)
        CHECK(mag(p.z[a] - p.z[b] - static_cast<double>(s) * p.y) > opt.guard);
    }
  for (int j = -2 * n; j <= 2 * n; ++j)
    CHECK(mag(p.lambda - static_cast<double>(j) * p.y) > opt.guard);
  for (int j = 1; j <= 2 * n; ++j)
    CHECK(mag(static_cast<double>(j) * p.y) > opt.guard);

  // Same seed reproduces the same draw bit for bit.
  const EllipticParams q = sample_generic_params(n, 991, opt);
  CHECK(q.lattice.tau == p.lattice.tau);
  CHECK(q.y == p.y);
  CHECK(q.lambda == p.lambda);
  for (int a = 0; a < n; ++a) CHECK(q.z[a] == p.z[a]);

  const cplx w = sample_generic_w(p, 17);
  for (int a = 0; a < n; ++a)
    for (int s = -2; s <= 2; ++s)
      CHECK(mag(w - p.z[a] - static_cast<double>(s) * p.y) > 1e-3);
  CHECK(sample_generic_w(p, 17) == w);
}

TEST_CASE("lambda shift helper") {
  EllipticParams p = sample_generic_params(2, 5);
  const EllipticParams q = p.with_lambda_shift(-3);
  CHECK(std::abs(q.lambda - (p.lambda - 3.0 * p.y)) < 1e-15);
  CHECK(q.y == p.y);
  CHECK(q.z == p.z);
}

TEST_CASE("invalid inputs are rejected") {
  LatticeParams bad;
  bad.tau = cplx{0.3, -1.0};
  CHECK_THROWS_AS(theta(cplx{0.1, 0.1}, bad), std::invalid_argument);

  LatticeParams bad2;
  bad2.truncation_order = 0;
  CHECK_THROWS_AS(theta(cplx{0.1, 0.1}, bad2), std::invalid_argument);

  SampleOptions strict;
  strict.guard = 0.9;  // unreachable: theta stays well below this on the cell
  strict.max_attempts = 50;
  CHECK_THROWS_AS(sample_generic_params(3, 1, strict), sampling_error);
}
