// Residue pairing: closed values on elementary generators, the weight
// function Gram matrix, both orthogonality sums, matrix-inverse duality of
// the normalized evaluation matrices, block factorization over shuffle
// products, and rejection of resonant or mismatched inputs.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ellqg/pairing.hpp"

using namespace ellqg;

namespace {

constexpr std::uint64_t kSeed = 0x9a1f00d5ull;

double rel_gap(const Scaled& a, const Scaled& b) {
  const double scale =
      std::max({std::abs(a.v), std::abs(b.v), a.mag, b.mag, 1e-300});
  return std::abs(a.v - b.v) / scale;
}

// prod_{a in S, b not in S} theta(z_a - z_b + shift), one half of the
// boundary product, as used in the two normalized evaluation matrices.
cplx half_boundary(const SubsetIndex& S, const EllipticParams& p, cplx shift) {
  cplx out(1.0, 0.0);
  const SubsetIndex Sbar = complement(S);
  for (int a : S.members)
    for (int b : Sbar.members)
      out *= theta(p.z[static_cast<std::size_t>(a - 1)] -
                       p.z[static_cast<std::size_t>(b - 1)] + shift,
                   p.lattice);
  return out;
}

// Restriction of a parameter set to a single evaluation point, for pairing
// a one-site block on its own.
EllipticParams single_site(const EllipticParams& p, int a) {
  EllipticParams out = p;
  out.z = {p.z[static_cast<std::size_t>(a - 1)]};
  return out;
}

}  // namespace

TEST_CASE("closed pairing values on a single evaluation point") {
  const auto p = sample_generic_params(1, derive_seed(kSeed, "n1"));
  const cplx z = p.z[0], y = p.y, l = p.lambda;

  // Zero variables: the pairing multiplies the two constants exactly.
  {
    const auto ctx = make_pairing_context(p, 0);
    const auto val = pairing(omega_elementary(0, -1, z, l, y, p.lattice),
                             omega_elementary(0, 1, z, l, y, p.lattice), ctx);
    CHECK(val.v.real() == 1.0);
    CHECK(val.v.imag() == 0.0);
  }

  // One variable: theta(lambda - y) theta(lambda).
  {
    const auto ctx = make_pairing_context(p, 1);
    const auto val = pairing(omega_elementary(1, -1, z, l, y, p.lattice),
                             omega_elementary(1, 1, z, l, y, p.lattice), ctx);
    const cplx expected = theta(l - y, p.lattice) * theta(l, p.lattice);
    CHECK(std::abs(val.v - expected) <= 1e-12 * std::abs(expected));
  }

  // More variables than points: the residue sum is empty, hence exactly 0.
  for (int k = 2; k <= 3; ++k) {
    const auto ctx = make_pairing_context(p, k);
    const auto val = pairing(omega_elementary(k, -1, z, l, y, p.lattice),
                             omega_elementary(k, 1, z, l, y, p.lattice), ctx);
    CHECK(val.v == cplx(0.0, 0.0));
    CHECK(val.mag == 0.0);
  }
}

TEST_CASE("Gram matrix of weight functions is diagonal with psi") {
  const struct {
    int n, k;
  } cases[] = {{2, 1}, {2, 2}, {3, 1}, {3, 2}};
  for (const auto& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.k);
    const auto p = sample_generic_params(
        c.n, derive_seed(kSeed, "gram" + std::to_string(c.n) +
                                    std::to_string(c.k)));
    const auto ctx = make_pairing_context(p, c.k);
    const auto gram = orthogonality_matrix(c.k, ctx);
    const int dim = static_cast<int>(gram.index.size());
    REQUIRE(dim == static_cast<int>(binomial(c.n, c.k)));
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        const cplx expected =
            (i == j) ? psi_coeff(gram.index[static_cast<std::size_t>(i)],
                                 p.lambda, p.y, p.lattice)
                     : cplx(0.0, 0.0);
        const double scale = std::max({gram.scale, std::abs(expected), 1e-300});
        CHECK(std::abs(gram.values(i, j) - expected) <= 1e-8 * scale);
      }
    }
  }
}

TEST_CASE("orthogonality sums over evaluation subsets") {
  const struct {
    int n, k;
  } cases[] = {{2, 1}, {3, 2}, {4, 2}};
  for (const auto& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.k);
    const auto p = sample_generic_params(
        c.n, derive_seed(kSeed, "ortho" + std::to_string(c.n) +
                                    std::to_string(c.k)));
    const auto ctx = make_pairing_context(p, c.k);
    const auto subsets = subsets_of_size(c.n, c.k);
    for (const auto& I : subsets) {
      for (const auto& J : subsets) {
        CHECK(ortho_sum_check(I, J, ctx) <= 1e-8);
        CHECK(ortho_dual_check(I, J, ctx) <= 1e-8);
      }
    }
  }
}

TEST_CASE("normalized evaluation matrices are two-sided inverses") {
  for (int n = 2; n <= 5; ++n) {
    for (int k = 0; k <= std::min(n, 3); ++k) {
      CAPTURE(n);
      CAPTURE(k);
      const auto p = sample_generic_params(
          n, derive_seed(kSeed, "inv" + std::to_string(n) +
                                    std::to_string(k)));
      const auto subsets = subsets_of_size(n, k);
      const int dim = static_cast<int>(subsets.size());
      Eigen::MatrixXcd X(dim, dim), Y(dim, dim);
      for (int col = 0; col < dim; ++col) {
        const auto& K = subsets[static_cast<std::size_t>(col)];
        const auto t = z_at(p, K);
        const cplx dx = half_boundary(K, p, cplx(0.0, 0.0));
        const cplx dy = half_boundary(K, p, p.y);
        for (int row = 0; row < dim; ++row) {
          const auto& S = subsets[static_cast<std::size_t>(row)];
          X(row, col) = normalized_w(S, -1, p, t).v / dx;
          Y(col, row) = normalized_w(S, +1, p, t).v / dy;
        }
      }
      const auto id = Eigen::MatrixXcd::Identity(dim, dim);
      const double scale =
          std::max(1.0, X.cwiseAbs().maxCoeff() * Y.cwiseAbs().maxCoeff());
      CHECK((X * Y - id).cwiseAbs().maxCoeff() <= 1e-8 * scale);
      CHECK((Y * X - id).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
  }
}

TEST_CASE("shuffle products pair block by block") {
  const auto p = sample_generic_params(2, derive_seed(kSeed, "blocks"));
  const cplx y = p.y, l = p.lambda;

  // One-variable blocks on z_1 and z_2: the left factors sit at the
  // lambda required for the shuffle products to combine at lambda.
  for (int kp1 = 0; kp1 <= 1; ++kp1) {
    for (int kp2 = 0; kp2 <= 1; ++kp2) {
      for (int kq1 = 0; kq1 <= 1; ++kq1) {
        for (int kq2 = 0; kq2 <= 1; ++kq2) {
          if (kp1 + kp2 != kq1 + kq2) continue;
          CAPTURE(kp1);
          CAPTURE(kp2);
          CAPTURE(kq1);
          CAPTURE(kq2);
          const cplx lf = l + static_cast<double>(1 - 2 * kp2) * y;
          const cplx lg = l + static_cast<double>(1 - 2 * kq2) * y;
          const auto f1 = omega_elementary(kp1, -1, p.z[0], lf, y, p.lattice);
          const auto f2 = omega_elementary(kp2, -1, p.z[1], l, y, p.lattice);
          const auto g1 = omega_elementary(kq1, 1, p.z[0], lg, y, p.lattice);
          const auto g2 = omega_elementary(kq2, 1, p.z[1], l, y, p.lattice);
          const auto F = shuffle_product(f1, f2);
          const auto G = shuffle_product(g1, g2);
          const auto ctx = make_pairing_context(p, kp1 + kp2);
          const auto lhs = pairing(F, G, ctx);
          if (kp1 == kq1 && kp2 == kq2) {
            const auto ctx1 = make_pairing_context(single_site(p, 1), kp1);
            const auto ctx2 = make_pairing_context(single_site(p, 2), kp2);
            const auto rhs = pairing(f1, g1, ctx1) * pairing(f2, g2, ctx2);
            CHECK(rel_gap(lhs, rhs) <= 1e-9);
            if (kp1 == 1 && kp2 == 0) {
              // The left block pairs at the shifted dynamical parameter.
              const cplx expected =
                  theta(l, p.lattice) * theta(l + y, p.lattice);
              CHECK(std::abs(lhs.v - expected) <= 1e-9 * std::abs(expected));
            }
          } else {
            CHECK(std::abs(lhs.v) <= 1e-9 * std::max(lhs.mag, 1e-300));
          }
        }
      }
    }
  }
}

TEST_CASE("resonant points and mismatched metadata are rejected") {
  const auto p = sample_generic_params(3, derive_seed(kSeed, "reject"));

  CHECK_THROWS_AS(make_pairing_context(p, -1), std::invalid_argument);

  auto coincident = p;
  coincident.z[1] = coincident.z[0];
  CHECK_THROWS_AS(make_pairing_context(coincident, 1), std::invalid_argument);

  auto step_one = p;
  step_one.z[1] = step_one.z[0] + step_one.y;
  CHECK_THROWS_AS(make_pairing_context(step_one, 1), std::invalid_argument);

  auto step_two = p;
  step_two.z[2] = step_two.z[0] + 2.0 * step_two.y;
  CHECK_THROWS_AS(make_pairing_context(step_two, 1), std::invalid_argument);

  const auto ctx = make_pairing_context(p, 1);
  const SubsetIndex I(3, {1});
  const auto wm = omega_weight(I, -1, p);
  const auto wp = omega_weight(I, +1, p);
  CHECK_THROWS_AS(pairing(wp, wp, ctx), std::invalid_argument);
  CHECK_THROWS_AS(pairing(wm, wm, ctx), std::invalid_argument);

  const auto ctx2 = make_pairing_context(p, 2);
  CHECK_THROWS_AS(pairing(wm, wp, ctx2), std::invalid_argument);
  CHECK_THROWS_AS(orthogonality_matrix(1, ctx2), std::invalid_argument);

  auto shifted = p;
  shifted.z[0] += 0.05;
  const auto wrong_pts = omega_weight(I, -1, shifted);
  CHECK_THROWS_AS(pairing(wrong_pts, wp, ctx), std::invalid_argument);

  const SubsetIndex big(3, {1, 2});
  CHECK_THROWS_AS(ortho_sum_check(big, big, ctx), std::invalid_argument);
  CHECK_THROWS_AS(ortho_dual_check(I, big, ctx), std::invalid_argument);
}
