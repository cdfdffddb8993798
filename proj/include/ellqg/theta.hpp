// Odd Jacobi theta function on C / (Z + tau*Z), normalized so theta'(0) = 1,
// plus the sampling utilities that produce guarded-generic parameter sets for
// the verification suites. Everything downstream funnels through theta().
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ellqg {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Signals that an evaluation got too close to a theta zero in a denominator.
class pole_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Signals that parameter sampling exhausted its attempt budget.
class sampling_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatticeParams {
  cplx tau{0.0, 1.0};
  int truncation_order = 40;
};

// theta(z) = sin(pi z)/pi * prod_{j>=1} (1-q^j e(z))(1-q^j e(-z))/(1-q^j)^2,
// q = e^{2 pi i tau}, e(z) = e^{2 pi i z}. Odd, theta'(0)=1, zero set exactly
// Z + tau*Z. The argument is reduced to |Im z| <= Im(tau)/2, |Re z| <= 1/2
// before the truncated product is evaluated, and the exact quasi-periodicity
// multiplier is restored afterwards; on that strip every product factor is
// bounded and the truncation tail is far below double precision for
// Im tau >= 0.5 at the default order.
cplx theta(cplx z, const LatticeParams& lat);

// Exact factor M(z,r,s) with theta(z + r + s*tau) = M(z,r,s) * theta(z):
// M = (-1)^{r+s} exp(-pi i tau s^2 - 2 pi i s z).
cplx quasi_period_multiplier(cplx z, int r, int s, const LatticeParams& lat);

// Central-difference estimate of theta'(0); the normalization makes the
// exact value 1, so |result - 1| measures global evaluation error.
cplx theta_derivative_at_zero(const LatticeParams& lat, double step = 1e-5);

// A full parameter set for the rank-one theory: lattice, step y, dynamical
// parameter lambda, and evaluation points z_1..z_n.
struct EllipticParams {
  LatticeParams lattice;
  cplx y;
  cplx lambda;
  std::vector<cplx> z;

  int n() const { return static_cast<int>(z.size()); }
  EllipticParams with_lambda_shift(int j) const {  // lambda -> lambda + j*y
    EllipticParams p = *this;
    p.lambda += static_cast<double>(j) * y;
    return p;
  }
};

// Deterministic uniform generator; raw 53-bit mapping rather than
// std::uniform_real_distribution so streams do not depend on the stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  double unit();                       // in [0,1)
  double range(double lo, double hi);  // in [lo,hi)
  cplx box(double re_lo, double re_hi, double im_lo, double im_hi);

 private:
  std::uint64_t next_u64();
  std::uint64_t state_;
};

// FNV-1a over a label, folded with a master seed; used to give every check
// its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t master, const std::string& label);

struct SampleOptions {
  double guard = 1e-3;       // lower bound kept on guarded |theta| values
  double im_tau_min = 0.5;
  double im_tau_max = 2.0;
  int max_attempts = 2000;
};

// Draws tau, y, lambda, z_1..z_n with all of
//   |theta(z_a - z_b - s y)| > guard   (a != b, |s| <= n)
//   |theta(lambda - j y)|    > guard   (|j| <= 2n)
//   |theta(j y)|             > guard   (1 <= j <= 2n)
// so every denominator appearing in the verified identities stays away from
// the zero lattice. Throws sampling_error when the attempt budget runs out.
EllipticParams sample_generic_params(int n, std::uint64_t seed,
                                     const SampleOptions& opt = {});

// A spectral/evaluation point w kept away from z_a + s*y (|s| <= 2), for
// L-operator checks that shift w by +-y internally.
cplx sample_generic_w(const EllipticParams& params, std::uint64_t seed,
                      double guard = 1e-3);

}  // namespace ellqg
