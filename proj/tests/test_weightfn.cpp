// Weight functions: generators, shuffle products, the explicit symmetrized
// construction, normalization, triangularity, orthogonality, evaluation
// forms, duality, exchange relations, and the R-matrix reconstruction.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ellqg/weightfn.hpp"

using namespace ellqg;

namespace {

constexpr std::uint64_t kSeed = 0x5eed0bafull;

// Elementary factors for an iterated shuffle with prescribed per-site
// variable counts; site a sits at lambda + y sum_{b>a} (1 - 2 k_b).
std::vector<ThetaSymFn> site_factors(const std::vector<int>& ks, int sign,
                                     const EllipticParams& p) {
  const int n = static_cast<int>(ks.size());
  std::vector<ThetaSymFn> out;
  for (int a = 1; a <= n; ++a) {
    int shift = 0;
    for (int b = a + 1; b <= n; ++b) shift += 1 - 2 * ks[b - 1];
    out.push_back(omega_elementary(ks[a - 1], sign,
                                   p.z[static_cast<std::size_t>(a - 1)],
                                   p.lambda + static_cast<double>(shift) * p.y,
                                   p.y, p.lattice));
  }
  return out;
}

ThetaSymFn fold_right(const std::vector<ThetaSymFn>& fs) {
  ThetaSymFn cur = fs.back();
  for (int a = static_cast<int>(fs.size()) - 2; a >= 0; --a)
    cur = shuffle_product(fs[static_cast<std::size_t>(a)], cur);
  return cur;
}

double rel_gap(const Scaled& a, const Scaled& b) {
  const double scale =
      std::max({std::abs(a.v), std::abs(b.v), a.mag, b.mag, 1e-300});
  return std::abs(a.v - b.v) / scale;
}

std::vector<cplx> replace_at(std::vector<cplx> zs, int pos, cplx value) {
  zs[static_cast<std::size_t>(pos)] = value;
  return zs;
}

}  // namespace

TEST_CASE("elementary generators match their displayed products") {
  const auto p = sample_generic_params(1, derive_seed(kSeed, "elem"));
  const cplx z = p.z[0], y = p.y, l = p.lambda;

  const auto f0m = omega_elementary(0, -1, z, l, y, p.lattice);
  const auto f0p = omega_elementary(0, 1, z, l, y, p.lattice);
  CHECK(std::abs(f0m({}).v - 1.0) < 1e-15);
  CHECK(std::abs(f0p({}).v - 1.0) < 1e-15);

  for (int k = 1; k <= 3; ++k) {
    const auto t = sample_t(k, p, derive_seed(kSeed, "et" + std::to_string(k)));
    const auto fm = omega_elementary(k, -1, z, l, y, p.lattice);
    const auto fp = omega_elementary(k, 1, z, l, y, p.lattice);
    cplx em = 1.0, ep = 1.0;
    for (int j = 0; j < k; ++j) {
      em *= theta(l - t[static_cast<std::size_t>(j)] + z -
                      static_cast<double>(k) * y,
                  p.lattice);
      ep *= theta(l + t[static_cast<std::size_t>(j)] - z +
                      (1.0 - static_cast<double>(k)) * y,
                  p.lattice);
    }
    CHECK(std::abs(fm(t).v - em) < 1e-12 * std::abs(em));
    CHECK(std::abs(fp(t).v - ep) < 1e-12 * std::abs(ep));
  }

  // The duality map sends the k-variable minus generator to (-1)^k times the
  // plus generator at the reflected dynamical parameter.
  for (int k = 0; k <= 3; ++k) {
    const auto t = sample_t(k, p, derive_seed(kSeed, "rho" + std::to_string(k)));
    const auto fm = omega_elementary(k, -1, z, l, y, p.lattice);
    const auto dual = rho_dual(fm);
    CHECK(dual.sign == 1);
    const cplx reflected = -l - (1.0 - 2.0 * static_cast<double>(k)) * y;
    CHECK(std::abs(dual.lambda - reflected) < 1e-12);
    const auto fp = omega_elementary(k, 1, z, reflected, y, p.lattice);
    const cplx want = (k % 2 == 0 ? 1.0 : -1.0) * fp(t).v;
    CHECK(std::abs(dual(t).v - want) < 1e-10 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("shuffle with a unit factor reduces to the boundary kernel") {
  const auto p = sample_generic_params(3, derive_seed(kSeed, "unit"));
  const cplx y = p.y, l = p.lambda;
  const auto t = sample_t(2, p, derive_seed(kSeed, "unit-t"));

  // f * 1, minus family: phi^- has only the j-block z''-factors.
  {
    const auto f = omega_elementary(2, -1, p.z[0], l + 2.0 * y, y, p.lattice);
    const auto one = unit_fn(-1, {p.z[1], p.z[2]}, l, y, p.lattice);
    const auto prod = shuffle_product(f, one);
    cplx want = f(t).v;
    for (const cplx& tj : t)
      for (int b = 1; b <= 2; ++b)
        want *= theta(tj - p.z[static_cast<std::size_t>(b)] + y, p.lattice);
    CHECK(std::abs(prod(t).v - want) < 1e-10 * std::abs(want));
    CHECK(prod.k == 2);
    CHECK(prod.n() == 3);
  }
  // 1 * f, minus family: only the l-block z'-factors.
  {
    const auto one = unit_fn(-1, {p.z[0]}, l + y * (2.0 - 4.0), y, p.lattice);
    const auto f = omega_elementary(2, -1, p.z[1], l + y, y, p.lattice);
    // right factor over (z2,z3) needs its own shape; use a two-site product.
    const auto g = shuffle_product(
        f, omega_elementary(0, -1, p.z[2], l, y, p.lattice));
    const auto prod = shuffle_product(one, g);
    cplx want = g(t).v;
    for (const cplx& tl : t) want *= theta(tl - p.z[0], p.lattice);
    CHECK(std::abs(prod(t).v - want) < 1e-10 * std::abs(want));
  }
  // Plus family: f * 1 picks up theta(t_j - z_b), 1 * f picks up
  // theta(t_l - z_a + y).
  {
    const auto f = omega_elementary(2, 1, p.z[0], l + 2.0 * y, y, p.lattice);
    const auto one = unit_fn(1, {p.z[1], p.z[2]}, l, y, p.lattice);
    const auto prod = shuffle_product(f, one);
    cplx want = f(t).v;
    for (const cplx& tj : t)
      for (int b = 1; b <= 2; ++b)
        want *= theta(tj - p.z[static_cast<std::size_t>(b)], p.lattice);
    CHECK(std::abs(prod(t).v - want) < 1e-10 * std::abs(want));

    const auto one1 = unit_fn(1, {p.z[0]}, l + y * (1.0 - 2.0), y, p.lattice);
    const auto f1 = omega_elementary(1, 1, p.z[1], l, y, p.lattice);
    const auto prod1 = shuffle_product(one1, f1);
    const std::vector<cplx> t1 = {t[0]};
    const cplx want1 = f1(t1).v * theta(t[0] - p.z[0] + y, p.lattice);
    CHECK(std::abs(prod1(t1).v - want1) < 1e-10 * std::abs(want1));
  }
}

TEST_CASE("shuffle product is associative") {
  const auto p = sample_generic_params(3, derive_seed(kSeed, "assoc"));
  for (int sign : {-1, 1}) {
    for (const auto& ks : {std::vector<int>{1, 2, 1}, std::vector<int>{0, 1, 1}}) {
      const auto fs = site_factors(ks, sign, p);
      const auto left = shuffle_product(shuffle_product(fs[0], fs[1]), fs[2]);
      const auto right = shuffle_product(fs[0], shuffle_product(fs[1], fs[2]));
      const int k = left.k;
      for (int trial = 0; trial < 3; ++trial) {
        const auto t =
            sample_t(k, p, derive_seed(kSeed, "at" + std::to_string(trial) +
                                                  std::to_string(sign)));
        CHECK(rel_gap(left(t), right(t)) < 1e-9);
      }
    }
  }
}

TEST_CASE("duality reverses shuffle factors") {
  const auto p = sample_generic_params(2, derive_seed(kSeed, "dual"));
  const cplx y = p.y, l = p.lambda;
  for (const auto& ks : {std::vector<int>{1, 1}, std::vector<int>{2, 1}}) {
    const auto fs = site_factors(ks, -1, p);
    const auto prod = shuffle_product(fs[0], fs[1]);
    const auto swapped = shuffle_product(rho_dual(fs[1]), rho_dual(fs[0]));
    CHECK(swapped.sign == 1);
    CHECK(std::abs(swapped.lambda - rho_dual(prod).lambda) < 1e-12);
    for (int trial = 0; trial < 3; ++trial) {
      const auto t = sample_t(prod.k, p,
                              derive_seed(kSeed, "dt" + std::to_string(trial) +
                                                     std::to_string(ks[0])));
      CHECK(rel_gap(prod(t), swapped(t)) < 1e-10);
    }
  }
  (void)l;
  (void)y;
}

TEST_CASE("weight functions: shuffle and explicit constructions agree") {
  for (int n = 1; n <= 5; ++n) {
    const auto p =
        sample_generic_params(n, derive_seed(kSeed, "x" + std::to_string(n)));
    for (int k = 0; k <= std::min(n, 3); ++k) {
      for (const auto& I : subsets_of_size(n, k)) {
        for (int sign : {-1, 1}) {
          const auto f = omega_weight(I, sign, p);
          CHECK(f.k == k);
          CHECK(f.n() == n);
          for (int trial = 0; trial < 4; ++trial) {
            const auto t = sample_t(
                k, p,
                derive_seed(kSeed, "xt" + std::to_string(n * 100 + k * 10 +
                                                         trial) +
                                       std::to_string(sign) +
                                       std::to_string(subset_to_mask(I))));
            const Scaled via_shuffle = f(t);
            const Scaled via_explicit = omega_weight_explicit(I, sign, p, t);
            CAPTURE(n);
            CAPTURE(k);
            CAPTURE(sign);
            CHECK(rel_gap(via_shuffle, via_explicit) < 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("single-variable weight functions match the closed product form") {
  for (int n : {1, 2, 4}) {
    const auto p =
        sample_generic_params(n, derive_seed(kSeed, "k1" + std::to_string(n)));
    const cplx y = p.y, l = p.lambda;
    for (int a = 1; a <= n; ++a) {
      const SubsetIndex I(n, {a});
      const auto t = sample_t(1, p, derive_seed(kSeed, "k1t" + std::to_string(
                                                             n * 10 + a)));
      const cplx za = p.z[static_cast<std::size_t>(a - 1)];
      cplx minus = theta(l - t[0] + za + y * static_cast<double>(n - a - 1),
                         p.lattice);
      cplx plus =
          theta(l + t[0] - za + y * static_cast<double>(n - a), p.lattice);
      for (int b = 1; b <= n; ++b) {
        if (b == a) continue;
        const cplx zb = p.z[static_cast<std::size_t>(b - 1)];
        minus *= b < a ? theta(t[0] - zb, p.lattice)
                       : theta(t[0] - zb + y, p.lattice);
        plus *= b < a ? theta(t[0] - zb + y, p.lattice)
                      : theta(t[0] - zb, p.lattice);
      }
      const Scaled sm = omega_weight(I, -1, p)(t);
      const Scaled sp = omega_weight(I, 1, p)(t);
      CHECK(std::abs(sm.v - minus) < 1e-10 * std::abs(minus));
      CHECK(std::abs(sp.v - plus) < 1e-10 * std::abs(plus));
      CHECK(std::abs(omega_weight_explicit(I, -1, p, t).v - minus) <
            1e-10 * std::abs(minus));
      CHECK(std::abs(omega_weight_explicit(I, 1, p, t).v - plus) <
            1e-10 * std::abs(plus));
    }
  }
}

TEST_CASE("psi coefficients and the single-site identification") {
  const auto p = sample_generic_params(2, derive_seed(kSeed, "psi"));
  const cplx y = p.y, l = p.lambda;
  CHECK(std::abs(psi_coeff(SubsetIndex(2, {}), l, y, p.lattice) - 1.0) <
        1e-15);
  const cplx v1 = psi_coeff(SubsetIndex(1, {1}), l, y, p.lattice);
  const cplx w1 = theta(l - y, p.lattice) * theta(l, p.lattice);
  CHECK(std::abs(v1 - w1) < 1e-12 * std::abs(w1));
  const cplx v2 = psi_coeff(SubsetIndex(2, {1}), l, y, p.lattice);
  const cplx w2 = theta(l, p.lattice) * theta(l + y, p.lattice);
  CHECK(std::abs(v2 - w2) < 1e-12 * std::abs(w2));

  const auto p1 = sample_generic_params(1, derive_seed(kSeed, "psi1"));
  const auto empty = omega_weight(SubsetIndex(1, {}), -1, p1);
  CHECK(empty.k == 0);
  CHECK(std::abs(empty({}).v - 1.0) < 1e-15);
  const auto full = omega_weight(SubsetIndex(1, {1}), -1, p1);
  const auto gen =
      omega_elementary(1, -1, p1.z[0], p1.lambda, p1.y, p1.lattice);
  const auto t = sample_t(1, p1, derive_seed(kSeed, "psi1t"));
  CHECK(rel_gap(full(t), gen(t)) < 1e-12);
}

TEST_CASE("weight functions obey the vanishing conditions") {
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{
           {2, 2}, {3, 2}, {4, 3}}) {
    const auto p =
        sample_generic_params(n, derive_seed(kSeed, "v" + std::to_string(n)));
    for (const auto& I : subsets_of_size(n, k)) {
      for (int sign : {-1, 1}) {
        const auto f = omega_weight(I, sign, p);
        for (int a = 1; a <= n; ++a) {
          CAPTURE(n);
          CAPTURE(a);
          CHECK(vanishing_deviation(f, a, derive_seed(kSeed, "vd"), 2) < 1e-9);
        }
      }
    }
  }
  // k <= 1 is vacuous by convention.
  const auto p = sample_generic_params(2, derive_seed(kSeed, "v1"));
  const auto f = omega_weight(SubsetIndex(2, {1}), -1, p);
  CHECK(vanishing_deviation(f, 1, kSeed, 2) == 0.0);
}

TEST_CASE("normalized weight functions are triangular with the displayed diagonal") {
  for (int n : {2, 3, 4}) {
    const auto p =
        sample_generic_params(n, derive_seed(kSeed, "tri" + std::to_string(n)));
    const cplx y = p.y, l = p.lambda;
    for (int k = 1; k <= std::min(n, 3); ++k) {
      const auto subsets = subsets_of_size(n, k);
      for (const auto& I : subsets) {
        for (const auto& J : subsets) {
          const auto tj = z_at(p, J);
          const Scaled vm = normalized_w(I, -1, p, tj);
          const Scaled vp = normalized_w(I, 1, p, tj);
          CAPTURE(n);
          CAPTURE(k);
          if (!subset_leq(I, J))
            CHECK(std::abs(vm.v) < 1e-9 * std::max(vm.mag, 1e-300));
          if (!subset_leq(J, I))
            CHECK(std::abs(vp.v) < 1e-9 * std::max(vp.mag, 1e-300));
        }
        // Diagonal values.
        const auto ti = z_at(p, I);
        cplx lam_part = 1.0, cross_m = 1.0, cross_p = 1.0;
        const auto Ibar = complement(I);
        for (int a : I.members) {
          lam_part *=
              theta(l - (static_cast<double>(weight_index(a, I)) + 1.0) * y,
                    p.lattice);
          for (int b : Ibar.members) {
            const cplx za = p.z[static_cast<std::size_t>(a - 1)];
            const cplx zb = p.z[static_cast<std::size_t>(b - 1)];
            cross_m *= theta(za - zb + static_cast<double>(epsilon(b, a)) * y,
                             p.lattice);
            cross_p *= theta(za - zb + static_cast<double>(epsilon(a, b)) * y,
                             p.lattice);
          }
        }
        const cplx want_m = lam_part * cross_m;
        const cplx want_p = cross_p / lam_part;
        CHECK(std::abs(normalized_w(I, -1, p, ti).v - want_m) <
              1e-9 * std::abs(want_m));
        CHECK(std::abs(normalized_w(I, 1, p, ti).v - want_p) <
              1e-9 * std::abs(want_p));
      }
    }
  }
}

TEST_CASE("orthogonality of normalized weight functions") {
  for (int n : {2, 3}) {
    const auto p =
        sample_generic_params(n, derive_seed(kSeed, "ort" + std::to_string(n)));
    const cplx y = p.y;
    auto cross = [&](const SubsetIndex& K, cplx shift) {
      cplx v = 1.0;
      const auto Kbar = complement(K);
      for (int a : K.members)
        for (int b : Kbar.members)
          v *= theta(p.z[static_cast<std::size_t>(a - 1)] -
                         p.z[static_cast<std::size_t>(b - 1)] + shift,
                     p.lattice);
      return v;
    };
    for (int k = 1; k < n; ++k) {
      const auto subsets = subsets_of_size(n, k);
      for (const auto& I : subsets) {
        for (const auto& J : subsets) {
          Scaled sum;
          for (const auto& K : subsets) {
            const auto tk = z_at(p, K);
            const cplx den = cross(K, 0.0) * cross(K, y);
            sum += normalized_w(I, -1, p, tk) * normalized_w(J, 1, p, tk) *
                   Scaled(1.0 / den);
          }
          const cplx want = I == J ? 1.0 : 0.0;
          CHECK(std::abs(sum.v - want) < 1e-9 * std::max(sum.mag, 1.0));
        }
        // Equivalent form: sum over the function label instead of the
        // evaluation point.
        for (const auto& K : subsets) {
          Scaled sum;
          for (const auto& J : subsets)
            sum += normalized_w(J, -1, p, z_at(p, I)) *
                   normalized_w(J, 1, p, z_at(p, K));
          const cplx want = I == K ? cross(I, 0.0) * cross(I, y) : 0.0;
          CHECK(std::abs(sum.v - want) <
                1e-9 * std::max({sum.mag, std::abs(want), 1.0}));
        }
      }
    }
  }
}

TEST_CASE("weight-function evaluation matrix is nondegenerate") {
  const auto p = sample_generic_params(4, derive_seed(kSeed, "det"));
  const auto subsets = subsets_of_size(4, 2);
  const int m = static_cast<int>(subsets.size());
  Matrix mat(m, m);
  double scale = 1.0;
  for (int i = 0; i < m; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) {
      mat(i, j) = normalized_w(subsets[static_cast<std::size_t>(i)], 1, p,
                               z_at(p, subsets[static_cast<std::size_t>(j)]))
                      .v;
      row = std::max(row, std::abs(mat(i, j)));
    }
    scale *= row;
  }
  CHECK(std::abs(mat.determinant()) > 1e-10 * scale);
}

TEST_CASE("evaluation forms: identity, annihilation, closed values") {
  const auto p = sample_generic_params(1, derive_seed(kSeed, "ev"));
  const cplx y = p.y, l = p.lambda, z = p.z[0];

  const auto f3 = omega_elementary(3, -1, z, l, y, p.lattice);
  const auto same = ev_form(f3, z, 0);
  const auto t3 = sample_t(3, p, derive_seed(kSeed, "ev0"));
  CHECK(rel_gap(f3(t3), same(t3)) == 0.0);

  const auto zero = ev_form(f3, z, 4);
  CHECK(zero.k == 0);
  CHECK(std::abs(zero({}).v) == 0.0);

  for (int k = 0; k <= 3; ++k) {
    const auto f = omega_elementary(k, -1, z, l, y, p.lattice);
    const auto evd = ev_form(f, z, k);
    CHECK(evd.k == 0);
    CHECK(std::abs(evd.lambda - (l - static_cast<double>(k) * y)) < 1e-12);
    cplx want = 1.0;
    for (int s = 1; s <= k; ++s)
      want *= theta(l - static_cast<double>(s) * y, p.lattice);
    CHECK(std::abs(evd({}).v - want) < 1e-10 * (1.0 + std::abs(want)));
  }

  // Iterated substitution agrees with the chain of single substitutions.
  const cplx w = sample_generic_w(p, derive_seed(kSeed, "evw"));
  const auto two_step = ev_form(f3, w, 2);
  const auto chained = ev_form(ev_form(f3, w, 1), w - y, 1);
  const auto t1 = sample_t(1, p, derive_seed(kSeed, "ev1"));
  CHECK(rel_gap(two_step(t1), chained(t1)) < 1e-12);
  CHECK(std::abs(two_step.lambda - chained.lambda) < 1e-12);
}

TEST_CASE("full evaluation of an n-fold shuffle has the closed product form") {
  const auto p = sample_generic_params(3, derive_seed(kSeed, "eps"));
  const cplx y = p.y;
  for (const auto& ks : {std::vector<int>{1, 0, 2}, std::vector<int>{2, 1, 0}}) {
    const auto fs = site_factors(ks, -1, p);
    const auto F = fold_right(fs);
    const auto evd = ev_chain(F, p.z, ks);
    REQUIRE(evd.k == 0);
    const Scaled got = evd({});

    cplx want = 1.0;
    for (int a = 0; a < 3; ++a) {
      const auto single = ev_form(fs[static_cast<std::size_t>(a)],
                                  p.z[static_cast<std::size_t>(a)], ks[a]);
      want *= single({}).v;
      // Cross-check the one-site value against its product formula.
      cplx site = 1.0;
      for (int s = 1; s <= ks[a]; ++s)
        site *= theta(fs[static_cast<std::size_t>(a)].lambda -
                          static_cast<double>(s) * y,
                      p.lattice);
      CHECK(std::abs(single({}).v - site) < 1e-10 * (1.0 + std::abs(site)));
    }
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        const cplx d =
            p.z[static_cast<std::size_t>(b)] - p.z[static_cast<std::size_t>(a)];
        for (int s = 0; s < ks[b]; ++s)
          want *= theta(d - y * static_cast<double>(s), p.lattice);
        for (int s = 0; s < ks[a]; ++s)
          want *= theta(-d + y * (1.0 - static_cast<double>(s)), p.lattice);
        // Interaction of the two substitution chains through the pair
        // kernel, telescoped along the left chain.
        for (int r = 1; r <= ks[a]; ++r)
          want *= theta(d + y * static_cast<double>(r), p.lattice) /
                  theta(d + y * static_cast<double>(r - ks[b]), p.lattice);
      }
    CHECK(std::abs(got.v - want) <
          1e-9 * std::max({got.mag, std::abs(want), 1e-300}));
  }

  // Partial-sum violations annihilate the product.
  {
    const std::vector<int> ks = {1, 0, 2};
    const auto F = fold_right(site_factors(ks, -1, p));
    const auto bad = ev_chain(F, p.z, {2, 0, 1});
    const Scaled v = bad({});
    CHECK(std::abs(v.v) < 1e-9 * std::max(v.mag, 1e-300));
  }
  {
    const auto p2 = sample_generic_params(2, derive_seed(kSeed, "eps2"));
    const auto F = fold_right(site_factors({0, 1}, -1, p2));
    const auto bad = ev_chain(F, p2.z, {1, 0});
    const Scaled v = bad({});
    CHECK(std::abs(v.v) < 1e-9 * std::max(v.mag, 1e-300));
  }
}

TEST_CASE("evaluation interacts with the shuffle product through boundary factors") {
  const auto p = sample_generic_params(4, derive_seed(kSeed, "evsh"));
  const cplx y = p.y;
  const std::vector<cplx> zf = {p.z[0], p.z[1]};
  const std::vector<cplx> zg = {p.z[2], p.z[3]};

  for (int sign : {-1, 1}) {
    // f over (z1,z2) with two variables, g over (z3,z4) with one.
    const auto fs = site_factors({1, 1, 1, 0}, sign, p);
    const auto f = shuffle_product(fs[0], fs[1]);
    const auto g = shuffle_product(fs[2], fs[3]);
    const auto fg = shuffle_product(f, g);
    const auto t = sample_t(fg.k - 1, p, derive_seed(kSeed, "evsht"));

    for (int c = 1; c <= 4; ++c) {
      const cplx zc = p.z[static_cast<std::size_t>(c - 1)];
      const bool left = c <= 2;
      // Substitution point and kernel z-list modification per family.
      const cplx point = (sign < 0) == left ? zc : zc - y;
      const cplx moved = (sign < 0) == left ? zc - y : zc + y;

      const auto lhs_fn = ev_form(fg, point, 1);
      const Scaled lhs = lhs_fn(t);

      Scaled rhs;
      cplx factor = 1.0;
      if (left) {
        const auto ef = ev_form(f, point, 1);
        rhs = shuffle_eval(ef, g, sign, replace_at(zf, c - 1, moved), zg, y,
                           p.lattice, t);
        for (int b = 3; b <= 4; ++b)
          factor *= theta(zc - p.z[static_cast<std::size_t>(b - 1)] +
                              (sign < 0 ? y : -y),
                          p.lattice);
      } else {
        const auto eg = ev_form(g, point, 1);
        rhs = shuffle_eval(f, eg, sign, zf, replace_at(zg, c - 3, moved), y,
                           p.lattice, t);
        for (int a = 1; a <= 2; ++a)
          factor *= theta(zc - p.z[static_cast<std::size_t>(a - 1)] +
                              (sign < 0 ? -y : y),
                          p.lattice);
      }
      rhs = rhs * Scaled(factor);
      CAPTURE(sign);
      CAPTURE(c);
      CHECK(rel_gap(lhs, rhs) < 1e-9);
    }
  }

  // Iterated form, minus family, both variables of f consumed: the kernel
  // sees z_c shifted twice and the factor gains a second theta. The left
  // factor is a two-variable single-site generator, which does not vanish
  // under the double substitution, so both sides are genuinely nonzero.
  {
    const auto p3 = sample_generic_params(3, derive_seed(kSeed, "evsh2p"));
    const cplx y3 = p3.y;
    const auto f = omega_elementary(2, -1, p3.z[0],
                                    p3.lambda + y3 * (2.0 - 2.0), y3,
                                    p3.lattice);
    const auto gs = site_factors({0, 1, 0}, -1, p3);
    const auto g = shuffle_product(gs[1], gs[2]);  // over (z2, z3), one var
    const auto fg = shuffle_product(f, g);
    const cplx zc = p3.z[0];
    const auto t = sample_t(fg.k - 2, p3, derive_seed(kSeed, "evsh2"));
    const Scaled lhs = ev_form(fg, zc, 2)(t);
    const auto ef = ev_form(f, zc, 2);
    Scaled rhs = shuffle_eval(ef, g, -1, {zc - 2.0 * y3}, {p3.z[1], p3.z[2]},
                              y3, p3.lattice, t);
    cplx factor = 1.0;
    for (int b = 2; b <= 3; ++b) {
      const cplx zb = p3.z[static_cast<std::size_t>(b - 1)];
      factor *= theta(zc - zb + y3, p3.lattice) * theta(zc - zb, p3.lattice);
    }
    rhs = rhs * Scaled(factor);
    CHECK(ev_form(f, zc, 2).k == 0);
    CHECK(std::abs(ef({}).v) > 1e-6);  // genuinely nonzero left value
    CHECK(rel_gap(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("constructed functions are symmetric and quasi-periodic") {
  const auto p = sample_generic_params(3, derive_seed(kSeed, "qp"));
  for (int sign : {-1, 1}) {
    const auto f = omega_weight(SubsetIndex(3, {1, 3}), sign, p);
    CHECK(symmetry_deviation(f, derive_seed(kSeed, "s"), 4) < 1e-12);
    CHECK(quasi_periodicity_deviation(f, derive_seed(kSeed, "q"), 2) < 1e-10);
  }
  // The substituted function keeps the contract at the shifted dynamical
  // parameter, for both families.
  const auto p2 = sample_generic_params(2, derive_seed(kSeed, "qp2"));
  const cplx w = sample_generic_w(p2, derive_seed(kSeed, "qpw"));
  for (int sign : {-1, 1}) {
    const auto f = omega_weight(SubsetIndex(2, {1, 2}), sign, p2);
    const auto ef = ev_form(f, w, 1);
    CHECK(ef.k == 1);
    CHECK(quasi_periodicity_deviation(ef, derive_seed(kSeed, "qe"), 2) <
          1e-10);
  }
}

TEST_CASE("exchange relations against the two-site operator") {
  const auto p2 = sample_generic_params(2, derive_seed(kSeed, "ex2"));
  for (int k = 0; k <= 2; ++k)
    for (int sign : {-1, 1}) {
      CAPTURE(k);
      CAPTURE(sign);
      CHECK(exchange_deviation(1, k, sign, p2,
                               derive_seed(kSeed, "e" + std::to_string(k))) <
            1e-9);
    }
  const auto p3 = sample_generic_params(3, derive_seed(kSeed, "ex3"));
  for (int i : {1, 2})
    for (int k : {1, 2})
      for (int sign : {-1, 1}) {
        CAPTURE(i);
        CAPTURE(k);
        CAPTURE(sign);
        CHECK(exchange_deviation(
                  i, k, sign, p3,
                  derive_seed(kSeed, "e3" + std::to_string(i * 10 + k))) <
              1e-9);
      }
  CHECK_THROWS_AS(exchange_deviation(2, 1, -1, p2, kSeed), std::out_of_range);
}

TEST_CASE("two-point weight functions reconstruct the exchange matrices") {
  const auto p = sample_generic_params(2, derive_seed(kSeed, "rpm"));
  const auto rp = r_pm_from_weight_functions(p, derive_seed(kSeed, "rpms"));
  const cplx dz = p.z[0] - p.z[1];
  const Matrix want_minus = r_minus_gl2(dz, p.y, p.lambda, p.lattice);
  const Matrix want_plus = r_plus_gl2(dz, p.y, p.lambda, p.lattice);
  const double sm = want_minus.cwiseAbs().maxCoeff();
  const double sp = want_plus.cwiseAbs().maxCoeff();
  CHECK((rp.r_minus - want_minus).cwiseAbs().maxCoeff() < 1e-9 * sm);
  CHECK((rp.r_plus - want_plus).cwiseAbs().maxCoeff() < 1e-9 * sp);

  // Small-coupling limit: both matrices approach the identity at rate O(y).
  for (const auto& [yval, bound] :
       std::vector<std::pair<double, double>>{{1e-3, 0.05}, {1e-4, 5e-3}}) {
    EllipticParams q = p;
    q.y = yval;
    const auto rq = r_pm_from_weight_functions(q, derive_seed(kSeed, "rpmy"));
    const Matrix id = Matrix::Identity(4, 4);
    CHECK((rq.r_minus - id).cwiseAbs().maxCoeff() < bound);
    CHECK((rq.r_plus - id).cwiseAbs().maxCoeff() < bound);
  }

  const auto p3 = sample_generic_params(3, derive_seed(kSeed, "rpm3"));
  CHECK_THROWS_AS(r_pm_from_weight_functions(p3, kSeed),
                  std::invalid_argument);
}

TEST_CASE("validation and pole reporting") {
  const auto p = sample_generic_params(2, derive_seed(kSeed, "err"));
  const cplx y = p.y, l = p.lambda;

  CHECK_THROWS_AS(omega_elementary(-1, -1, p.z[0], l, y, p.lattice),
                  std::invalid_argument);
  CHECK_THROWS_AS(omega_elementary(1, 0, p.z[0], l, y, p.lattice),
                  std::invalid_argument);

  const auto f = omega_elementary(1, -1, p.z[0], l - y, y, p.lattice);
  const auto g = omega_elementary(1, -1, p.z[1], l, y, p.lattice);
  const auto gp = omega_elementary(1, 1, p.z[1], l, y, p.lattice);
  CHECK_THROWS_AS(shuffle_product(f, gp), std::invalid_argument);

  const auto off = omega_elementary(1, -1, p.z[0], l + 0.37, y, p.lattice);
  CHECK_THROWS_AS(shuffle_product(off, g), std::invalid_argument);

  const auto prod = shuffle_product(f, g);
  CHECK_THROWS_AS(prod({p.z[0]}), std::invalid_argument);  // arity
  const auto t = sample_t(1, p, derive_seed(kSeed, "errt"));
  CHECK_THROWS_AS(prod({t[0], t[0]}), pole_error);

  const SubsetIndex I(2, {1, 2});
  CHECK_THROWS_AS(normalized_w(I, -1, p, {t[0], t[0]}), pole_error);
  CHECK_THROWS_AS(vanishing_deviation(omega_weight(I, -1, p), 3, kSeed, 1),
                  std::out_of_range);
  CHECK_THROWS_AS(ev_form(omega_weight(I, -1, p), p.z[0], -1),
                  std::invalid_argument);
}
