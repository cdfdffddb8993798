#include "ellqg/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ellqg {

namespace {

constexpr double kPoleFloor = 1e-12;

bool close(cplx a, cplx b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

// The three metadata checks shared by both arguments of the pairing.
void require_matches_context(const ThetaSymFn& f, const PairingContext& ctx,
                             const char* which) {
  const std::string who(which);
  if (f.k != ctx.k) {
    throw std::invalid_argument(who + " argument has " + std::to_string(f.k) +
                                " variables, context expects " +
                                std::to_string(ctx.k));
  }
  if (f.n() != ctx.params.n() || !close(f.y, ctx.params.y) ||
      !close(f.lattice.tau, ctx.params.lattice.tau)) {
    throw std::invalid_argument(who +
                                " argument does not share the context's "
                                "evaluation data");
  }
  for (int a = 0; a < f.n(); ++a) {
    if (!close(f.z[a], ctx.params.z[a])) {
      throw std::invalid_argument(who +
                                  " argument is built on different "
                                  "evaluation points than the context");
    }
  }
}

}  // namespace

PairingContext make_pairing_context(const EllipticParams& params, int k,
                                    double guard) {
  if (k < 0) {
    throw std::invalid_argument("pairing order must be nonnegative");
  }
  const int n = params.n();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      for (int j = 0; j < n; ++j) {
        const cplx gap = params.z[a] - params.z[b] -
                         static_cast<double>(j) * params.y;
        if (std::abs(theta(gap, params.lattice)) <= guard) {
          throw std::invalid_argument(
              "resonant evaluation points: z[" + std::to_string(a + 1) +
              "] - z[" + std::to_string(b + 1) + "] - " + std::to_string(j) +
              "*y is too close to a lattice point");
        }
      }
    }
  }
  PairingContext ctx;
  ctx.params = params;
  ctx.k = k;
  ctx.guard = guard;
  return ctx;
}

cplx boundary_theta_product(const SubsetIndex& S,
                            const EllipticParams& params) {
  cplx out(1.0, 0.0);
  const SubsetIndex Sbar = complement(S);
  for (int a : S.members) {
    for (int b : Sbar.members) {
      const cplx d = params.z[a - 1] - params.z[b - 1];
      out *= theta(d, params.lattice) * theta(d + params.y, params.lattice);
    }
  }
  return out;
}

Scaled pairing(const ThetaSymFn& f, const ThetaSymFn& g,
               const PairingContext& ctx) {
  if (f.sign != -1) {
    throw std::invalid_argument("first pairing argument must be minus-family");
  }
  if (g.sign != +1) {
    throw std::invalid_argument("second pairing argument must be plus-family");
  }
  require_matches_context(f, ctx, "first");
  require_matches_context(g, ctx, "second");

  if (ctx.k == 0) return f({}) * g({});

  const int n = ctx.params.n();
  // More variables than evaluation points: no residue terms exist.
  if (ctx.k > n) return Scaled(cplx(0.0, 0.0), 0.0);
  const LatticeParams& lat = ctx.params.lattice;
  Scaled acc(cplx(0.0, 0.0), 0.0);
  for (const SubsetIndex& A : subsets_of_size(n, ctx.k)) {
    cplx den = boundary_theta_product(A, ctx.params);
    for (int a : A.members) {
      for (int b : A.members) {
        if (a == b) continue;
        const cplx q =
            theta(ctx.params.z[a - 1] - ctx.params.z[b - 1] + ctx.params.y,
                  lat);
        den *= q * q;
      }
    }
    if (std::abs(den) < kPoleFloor) {
      throw pole_error("pairing denominator vanished at a residue point");
    }
    const std::vector<cplx> t = z_at(ctx.params, A);
    acc += f(t) * g(t) * Scaled(cplx(1.0, 0.0) / den);
  }
  return acc;
}

GramResult orthogonality_matrix(int k, const PairingContext& ctx) {
  if (k != ctx.k) {
    throw std::invalid_argument("Gram matrix order must match the context");
  }
  const int n = ctx.params.n();
  GramResult out;
  out.index = subsets_of_size(n, k);
  const int dim = static_cast<int>(out.index.size());
  out.values = Eigen::MatrixXcd::Zero(dim, dim);

  std::vector<ThetaSymFn> minus, plus;
  minus.reserve(dim);
  plus.reserve(dim);
  for (const SubsetIndex& I : out.index) {
    minus.push_back(omega_weight(I, -1, ctx.params));
    plus.push_back(omega_weight(I, +1, ctx.params));
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const Scaled p = pairing(minus[i], plus[j], ctx);
      out.values(i, j) = p.v;
      out.scale = std::max({out.scale, p.mag, std::abs(p.v)});
    }
  }
  return out;
}

double ortho_sum_check(const SubsetIndex& I, const SubsetIndex& J,
                       const PairingContext& ctx) {
  if (I.k() != ctx.k || J.k() != ctx.k || I.n != ctx.params.n() ||
      J.n != ctx.params.n()) {
    throw std::invalid_argument("subset sizes must match the context");
  }
  Scaled sum(cplx(0.0, 0.0), 0.0);
  for (const SubsetIndex& K : subsets_of_size(ctx.params.n(), ctx.k)) {
    const std::vector<cplx> t = z_at(ctx.params, K);
    const Scaled term = normalized_w(I, -1, ctx.params, t) *
                        normalized_w(J, +1, ctx.params, t) *
                        Scaled(cplx(1.0, 0.0) / boundary_theta_product(K, ctx.params));
    sum += term;
  }
  const cplx target = (I == J) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
  const double scale = std::max({std::abs(target), sum.mag, 1e-300});
  return std::abs(sum.v - target) / scale;
}

double ortho_dual_check(const SubsetIndex& I, const SubsetIndex& K,
                        const PairingContext& ctx) {
  if (I.k() != ctx.k || K.k() != ctx.k || I.n != ctx.params.n() ||
      K.n != ctx.params.n()) {
    throw std::invalid_argument("subset sizes must match the context");
  }
  const std::vector<cplx> tI = z_at(ctx.params, I);
  const std::vector<cplx> tK = z_at(ctx.params, K);
  Scaled sum(cplx(0.0, 0.0), 0.0);
  for (const SubsetIndex& J : subsets_of_size(ctx.params.n(), ctx.k)) {
    sum += normalized_w(J, -1, ctx.params, tI) *
           normalized_w(J, +1, ctx.params, tK);
  }
  const cplx target =
      (I == K) ? boundary_theta_product(I, ctx.params) : cplx(0.0, 0.0);
  const double scale = std::max({std::abs(target), sum.mag, 1e-300});
  return std::abs(sum.v - target) / scale;
}

}  // namespace ellqg
