// Symmetric theta functions on products of elliptic curves: shuffle products,
// weight functions by two independent constructions, normalization,
// evaluation (specialization) maps, duality, and the structural checks tied
// to them. The dynamical parameter bookkeeping follows the convention that a
// left factor of a shuffle lives at lambda + y(n''-2k'') relative to the
// right factor's lambda.
#pragma once

#include <functional>
#include <vector>

#include "ellqg/rmatrix.hpp"
#include "ellqg/subsets.hpp"
#include "ellqg/theta.hpp"

namespace ellqg {

// A complex value together with the magnitude of the largest term that
// entered its computation. Sums of strongly cancelling terms keep a large
// mag, so |v| <= tol * mag is the right way to assert "this vanishes".
struct Scaled {
  cplx v{0.0, 0.0};
  double mag = 0.0;

  Scaled() = default;
  Scaled(cplx value, double magnitude) : v(value), mag(magnitude) {}
  explicit Scaled(cplx value) : v(value), mag(std::abs(value)) {}
};

inline Scaled operator*(const Scaled& a, const Scaled& b) {
  return Scaled(a.v * b.v, a.mag * b.mag);
}
inline Scaled& operator+=(Scaled& a, const Scaled& b) {
  a.v += b.v;
  a.mag = std::max(a.mag, b.mag);
  return a;
}

// A symmetric function of k complex variables carrying the metadata of the
// space it claims to live in: sign selects the quasi-periodicity contract,
// lambda/z/y/lattice pin the parameters.
struct ThetaSymFn {
  int k = 0;
  int sign = -1;  // -1 or +1
  cplx lambda;
  cplx y;
  std::vector<cplx> z;
  LatticeParams lattice;
  std::function<Scaled(const std::vector<cplx>&)> eval;

  int n() const { return static_cast<int>(z.size()); }
  Scaled operator()(const std::vector<cplx>& t) const;  // checks t.size() == k
};

// The one-point generators (n = 1):
//   sign -: prod_{j<=k} theta(lambda - t_j + z - k y)
//   sign +: prod_{j<=k} theta(lambda + t_j - z + (1-k) y)
ThetaSymFn omega_elementary(int k, int sign, cplx z, cplx lambda, cplx y,
                            const LatticeParams& lat);

// The constant 1 as the k = 0 element over an arbitrary z-list.
ThetaSymFn unit_fn(int sign, std::vector<cplx> z, cplx lambda, cplx y,
                   const LatticeParams& lat);

// Sum over (f.k, g.k)-shuffles of f(t_first) g(t_rest) phi(t,...), with the
// kernel's two z-blocks passed explicitly (no metadata checks); throws
// pole_error when a kernel denominator theta(t_l - t_j) is below 1e-12.
Scaled shuffle_eval(const ThetaSymFn& f, const ThetaSymFn& g, int sign,
                    const std::vector<cplx>& z_left,
                    const std::vector<cplx>& z_right, cplx y,
                    const LatticeParams& lat, const std::vector<cplx>& t);

// The shuffle product f * g. Requires matching sign, y, lattice, and the
// dynamical compatibility f.lambda = g.lambda + y (g.n() - 2 g.k).
ThetaSymFn shuffle_product(const ThetaSymFn& f, const ThetaSymFn& g);

// Reinterpretation of f in the opposite family, at the reflected dynamical
// parameter -lambda - (n-2k) y; values are untouched.
ThetaSymFn rho_dual(const ThetaSymFn& f);

// z_I as a vector, members in increasing order.
std::vector<cplx> z_at(const EllipticParams& params, const SubsetIndex& I);

// psi_I = prod_{j in I} theta(lambda - w(j,I) y) theta(lambda - (w(j,I)+1) y).
cplx psi_coeff(const SubsetIndex& I, cplx lambda, cplx y,
               const LatticeParams& lat);

// Weight function omega_I as an iterated shuffle of one-point generators,
// the a-th factor taken at lambda + y sum_{b>a} (1 - 2 [b in I]).
ThetaSymFn omega_weight(const SubsetIndex& I, int sign,
                        const EllipticParams& params);

// Independent construction: the symmetrized closed formula. Returns the
// normalized value w_I^{sign}(t); omega differs by the factor
// prod_{j != l} theta(t_j - t_l + y) (and psi_I for sign +).
Scaled normalized_w(const SubsetIndex& I, int sign,
                    const EllipticParams& params, const std::vector<cplx>& t);
Scaled omega_weight_explicit(const SubsetIndex& I, int sign,
                             const EllipticParams& params,
                             const std::vector<cplx>& t);

// Specialization chain: substitutes w, w-y, ..., w-(ell-1)y into the last
// ell slots; ell = 0 is the identity and ell > k gives the zero function.
// The dynamical metadata drops by y per substituted variable.
ThetaSymFn ev_form(const ThetaSymFn& f, cplx w, int ell);

// Composite ev_{z_n,ell_n} o ... o ev_{z_1,ell_1} applied to f.
ThetaSymFn ev_chain(const ThetaSymFn& f, const std::vector<cplx>& points,
                    const std::vector<int>& ells);

// Deviation diagnostics (all return max relative deviation over the trials).
double symmetry_deviation(const ThetaSymFn& f, std::uint64_t seed, int trials);
double quasi_periodicity_deviation(const ThetaSymFn& f, std::uint64_t seed,
                                   int trials);
// |f| / scale with the last two slots pinned to (z_a, z_a - y), free slots
// random; the scale is taken from a generic reference point so cancellation
// zeros register as small. Vacuous (0) for k < 2.
double vanishing_deviation(const ThetaSymFn& f, int a, std::uint64_t seed,
                           int trials);

// Deviation in the exchange relation between the omega vectors at z and at
// s_i z: sign -1 checks the plain S_i intertwiner, sign +1 the psi-conjugated
// one. Evaluates all subsets of size k at a sampled t.
double exchange_deviation(int i, int k, int sign, const EllipticParams& params,
                          std::uint64_t seed);

// Reconstructs the two 4x4 exchange matrices from weight-function values at
// n = 2 (change of basis between the orderings (z1,z2) and (z2,z1)).
struct RPairFromWeights {
  Matrix r_minus;
  Matrix r_plus;
};
RPairFromWeights r_pm_from_weight_functions(const EllipticParams& params,
                                            std::uint64_t seed);

std::vector<cplx> sample_t(int k, const EllipticParams& params,
                           std::uint64_t seed, double guard = 1e-3);

}  // namespace ellqg
