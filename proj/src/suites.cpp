#include "ellqg/suites.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "ellqg/action.hpp"
#include "ellqg/envelope.hpp"
#include "ellqg/pairing.hpp"
#include "ellqg/rmatrix.hpp"
#include "ellqg/subsets.hpp"
#include "ellqg/theta.hpp"
#include "ellqg/weightfn.hpp"

namespace ellqg {

namespace {

// Tolerance classes. Individual checks override where the identity composes
// more operators (looser) or pins an exact kernel property (tighter).
constexpr double kThetaTol = 1e-10;
constexpr double kDirectTol = 1e-9;
constexpr double kComposedTol = 1e-7;

// FNV-1a over the bit patterns of every sampled double, so a report carries
// a replayable fingerprint of the exact parameters each check consumed.
class Digest {
 public:
  void fold(double x) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h_ ^= (bits >> (8 * i)) & 0xffu;
      h_ *= 1099511628211ull;
    }
  }
  void fold(cplx v) {
    fold(v.real());
    fold(v.imag());
  }
  void fold(const EllipticParams& p) {
    fold(p.lattice.tau);
    fold(p.y);
    fold(p.lambda);
    for (const cplx& z : p.z) fold(z);
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 1469598103934665603ull;
};

struct CheckCtx {
  SuiteConfig cfg;
  std::uint64_t seed = 0;  // derived from cfg.seed and the check name
  Digest digest;
};

struct CheckSpec {
  std::string suite;
  std::string name;
  std::string statement;
  double tol = kDirectTol;
  std::function<double(CheckCtx&)> body;
};

double rel(cplx a, cplx b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

double rel_mat(const Matrix& a, const Matrix& b) {
  const double scale =
      std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

double rel_scaled(const Scaled& a, const Scaled& b) {
  const double scale =
      std::max({std::abs(a.v), std::abs(b.v), a.mag, b.mag, 1e-300});
  return std::abs(a.v - b.v) / scale;
}

cplx coeff_at(const DifferenceOperator& op, std::uint32_t out,
              std::uint32_t in, const EllipticParams& params) {
  const auto it = op.coefficients.find({out, in});
  if (it == op.coefficients.end()) return 0.0;
  return it->second(params).v;
}

EllipticParams sampled(int n, std::uint64_t seed, double guard) {
  SampleOptions opt;
  opt.guard = guard;
  return sample_generic_params(n, seed, opt);
}

// Runs one sampling attempt, redrawing on pole or resonance rejections.
// Every retry derives a fresh seed, so the sequence stays reproducible; a
// consistent failure means the parameter space is effectively closed off
// and surfaces as a runtime error.
template <typename F>
double with_retries(const CheckCtx& ctx, const std::string& label,
                    F&& attempt) {
  for (int r = 0; r < 6; ++r) {
    const std::uint64_t s =
        derive_seed(ctx.seed, label + "#" + std::to_string(r));
    try {
      return attempt(s);
    } catch (const pole_error&) {
    } catch (const sampling_error&) {
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::runtime_error("no usable generic parameters for check sample '" +
                           label + "' after repeated redraws");
}

// Per-site generators whose ordered shuffle product is the displayed
// n-point function: site a carries lambda shifted by sum_{b>a} (1 - 2 k_b).
std::vector<ThetaSymFn> site_factors(const std::vector<int>& ks, int sign,
                                     const EllipticParams& p) {
  const int n = static_cast<int>(ks.size());
  std::vector<ThetaSymFn> out;
  for (int a = 1; a <= n; ++a) {
    int shift = 0;
    for (int b = a + 1; b <= n; ++b) shift += 1 - 2 * ks[static_cast<std::size_t>(b - 1)];
    out.push_back(omega_elementary(ks[static_cast<std::size_t>(a - 1)], sign,
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

std::vector<cplx> box_vector(int count, Rng& rng) {
  std::vector<cplx> l(static_cast<std::size_t>(count));
  for (auto& v : l) v = rng.box(-0.4, 0.4, -0.2, 0.2);
  return l;
}

struct YbePoint {
  LatticeParams lat;
  cplx z, w, y;
  std::vector<cplx> lam;
};

YbePoint ybe_point(int N, std::uint64_t seed, double guard, Digest& dig) {
  const EllipticParams p = sampled(1, seed, guard);
  Rng rng(derive_seed(seed, "pt"));
  YbePoint out;
  out.lat = p.lattice;
  out.z = rng.box(-0.4, 0.4, -0.2, 0.2);
  out.w = rng.box(-0.4, 0.4, -0.2, 0.2);
  out.y = rng.box(-0.15, 0.15, -0.05, 0.05);
  out.lam = box_vector(N, rng);
  dig.fold(out.lat.tau);
  dig.fold(out.z);
  dig.fold(out.w);
  dig.fold(out.y);
  for (const cplx& v : out.lam) dig.fold(v);
  return out;
}

// A reference magnitude for theta near z that stays order-one even when z
// happens to fall close to a lattice zero.
double theta_scale(cplx z, const LatticeParams& lat) {
  return std::max({std::abs(theta(z, lat)),
                   std::abs(theta(z + cplx(0.37, 0.0) + 0.21 * lat.tau, lat)),
                   1e-300});
}

int spread_trials(int budget, int ways) {
  return std::max(1, budget / std::max(1, ways));
}

// ---------------------------------------------------------------------------
// Suite bodies. Each body returns the worst deviation it saw; the caller
// owns tolerance comparison so a global override stays possible.
// ---------------------------------------------------------------------------

void add_theta_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"theta", "oddness", "theta(-z) = -theta(z) at random points", kThetaTol,
       [](CheckCtx& ctx) {
         double worst = 0.0;
         for (int t = 0; t < ctx.cfg.trials; ++t) {
           const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
           const EllipticParams p = sampled(1, s, ctx.cfg.guard);
           Rng rng(derive_seed(s, "pt"));
           const cplx z = rng.box(-1.0, 1.0, -0.9, 0.9);
           ctx.digest.fold(p.lattice.tau);
           ctx.digest.fold(z);
           const double dev = std::abs(theta(z, p.lattice) +
                                       theta(-z, p.lattice)) /
                              theta_scale(z, p.lattice);
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"theta", "quasi-periodicity",
       "theta(z + r + s tau) = (-1)^{r+s} exp(-pi i tau s^2 - 2 pi i s z) "
       "theta(z) for integer r, s",
       kThetaTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         for (int t = 0; t < ctx.cfg.trials; ++t) {
           const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
           const EllipticParams p = sampled(1, s, ctx.cfg.guard);
           Rng rng(derive_seed(s, "pt"));
           const cplx z = rng.box(-0.8, 0.8, -0.6, 0.6);
           const int r = static_cast<int>(std::floor(rng.range(-2.0, 3.0)));
           const int q = static_cast<int>(std::floor(rng.range(-2.0, 3.0)));
           ctx.digest.fold(p.lattice.tau);
           ctx.digest.fold(z);
           ctx.digest.fold(static_cast<double>(r));
           ctx.digest.fold(static_cast<double>(q));
           const cplx lhs =
               theta(z + static_cast<double>(r) +
                         static_cast<double>(q) * p.lattice.tau,
                     p.lattice);
           const cplx rhs =
               quasi_period_multiplier(z, r, q, p.lattice) * theta(z, p.lattice);
           const double scale = std::max(
               {std::abs(lhs), std::abs(rhs), theta_scale(z, p.lattice)});
           worst = std::max(worst, std::abs(lhs - rhs) / scale);
         }
         return worst;
       }});

  specs.push_back(
      {"theta", "derivative-normalization",
       "theta'(0) = 1 via central differences", 1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         for (int t = 0; t < ctx.cfg.trials; ++t) {
           const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
           const EllipticParams p = sampled(1, s, ctx.cfg.guard);
           ctx.digest.fold(p.lattice.tau);
           worst = std::max(
               worst, std::abs(theta_derivative_at_zero(p.lattice) - 1.0));
         }
         return worst;
       }});

  specs.push_back(
      {"theta", "truncation-stability",
       "doubling the product truncation order leaves values unchanged",
       1e-12, [](CheckCtx& ctx) {
         double worst = 0.0;
         for (int t = 0; t < ctx.cfg.trials; ++t) {
           const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
           const EllipticParams p = sampled(1, s, ctx.cfg.guard);
           LatticeParams doubled = p.lattice;
           doubled.truncation_order = 2 * p.lattice.truncation_order;
           Rng rng(derive_seed(s, "pt"));
           const cplx z = rng.box(-1.2, 1.2, -1.0, 1.0);
           ctx.digest.fold(p.lattice.tau);
           ctx.digest.fold(z);
           const double dev = std::abs(theta(z, p.lattice) - theta(z, doubled)) /
                              theta_scale(z, p.lattice);
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"theta", "lattice-zeros",
       "theta vanishes on Z + tau Z and nowhere nearby generic", kThetaTol,
       [](CheckCtx& ctx) {
         double worst = 0.0;
         for (int t = 0; t < std::min(ctx.cfg.trials, 8); ++t) {
           const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
           const EllipticParams p = sampled(1, s, ctx.cfg.guard);
           ctx.digest.fold(p.lattice.tau);
           for (int r = -2; r <= 2; ++r) {
             for (int q = -2; q <= 2; ++q) {
               const cplx point = static_cast<double>(r) +
                                  static_cast<double>(q) * p.lattice.tau;
               worst = std::max(worst, std::abs(theta(point, p.lattice)) /
                                           theta_scale(point, p.lattice));
             }
           }
         }
         return worst;
       }});
}

void add_ybe_checks(std::vector<CheckSpec>& specs) {
  const auto dybe_body = [](int N) {
    return [N](CheckCtx& ctx) {
      double worst = 0.0;
      for (int t = 0; t < ctx.cfg.trials; ++t) {
        const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
        const YbePoint pt = ybe_point(N, s, ctx.cfg.guard, ctx.digest);
        const DynamicalRMatrix R = standard_r(N, pt.lat);
        worst = std::max(worst, check_dybe(R, pt.z, pt.w, pt.y, pt.lam));
      }
      return worst;
    };
  };
  const auto inversion_body = [](int N) {
    return [N](CheckCtx& ctx) {
      double worst = 0.0;
      for (int t = 0; t < ctx.cfg.trials; ++t) {
        const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
        const YbePoint pt = ybe_point(N, s, ctx.cfg.guard, ctx.digest);
        const DynamicalRMatrix R = standard_r(N, pt.lat);
        worst = std::max(worst, check_inversion(R, pt.z, pt.y, pt.lam));
      }
      return worst;
    };
  };

  specs.push_back({"ybe", "gl2-exchange",
                   "the 4x4 dynamical R-matrix satisfies the shifted "
                   "three-slot exchange relation",
                   kDirectTol, dybe_body(2)});
  specs.push_back({"ybe", "gl3-exchange",
                   "the 9x9 dynamical R-matrix satisfies the shifted "
                   "three-slot exchange relation",
                   kDirectTol, dybe_body(3)});
  specs.push_back({"ybe", "gl2-inversion",
                   "R(z)^{12} R(-z)^{21} is the identity for the 4x4 family",
                   kDirectTol, inversion_body(2)});
  specs.push_back({"ybe", "gl3-inversion",
                   "R(z)^{12} R(-z)^{21} is the identity for the 9x9 family",
                   kDirectTol, inversion_body(3)});
  specs.push_back(
      {"ybe", "asymmetric-solutions",
       "both triangular-normalized 4x4 families solve the same exchange "
       "relation and invert",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         for (int t = 0; t < ctx.cfg.trials; ++t) {
           const std::uint64_t s = derive_seed(ctx.seed, std::to_string(t));
           const YbePoint pt = ybe_point(2, s, ctx.cfg.guard, ctx.digest);
           for (bool plus : {false, true}) {
             const LatticeParams lat = pt.lat;
             const DynamicalRMatrix R =
                 wrap_scalar_gl2([lat, plus](cplx z, cplx y, cplx lam) {
                   return plus ? r_plus_gl2(z, y, lam, lat)
                               : r_minus_gl2(z, y, lam, lat);
                 });
             worst = std::max(worst,
                              check_dybe(R, pt.z, pt.w, pt.y, pt.lam));
             worst = std::max(worst, check_inversion(R, pt.z, pt.y, pt.lam));
           }
         }
         return worst;
       }});
}

void add_shuffle_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"shuffle", "associativity",
       "(f * g) * h = f * (g * h) on sampled symmetric arguments", kDirectTol,
       [](CheckCtx& ctx) {
         double worst = 0.0;
         const int reps = spread_trials(ctx.cfg.trials, 4);
         for (int t = 0; t < reps; ++t) {
           const double dev = with_retries(
               ctx, "assoc" + std::to_string(t), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(3, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 double local = 0.0;
                 for (int sign : {-1, 1}) {
                   for (const auto& ks : {std::vector<int>{1, 2, 1},
                                          std::vector<int>{0, 1, 1}}) {
                     const auto fs = site_factors(ks, sign, p);
                     const auto left =
                         shuffle_product(shuffle_product(fs[0], fs[1]), fs[2]);
                     const auto right =
                         shuffle_product(fs[0], shuffle_product(fs[1], fs[2]));
                     const auto tpt = sample_t(
                         left.k, p, derive_seed(seed, "t" + std::to_string(sign)),
                         ctx.cfg.guard);
                     for (const cplx& v : tpt) ctx.digest.fold(v);
                     local = std::max(local, rel_scaled(left(tpt), right(tpt)));
                   }
                 }
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"shuffle", "duality-antihomomorphism",
       "the sign-flipping duality sends f * g to dual(g) * dual(f)",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int reps = spread_trials(ctx.cfg.trials, 4);
         for (int t = 0; t < reps; ++t) {
           const double dev = with_retries(
               ctx, "dual" + std::to_string(t), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(2, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 double local = 0.0;
                 for (const auto& ks :
                      {std::vector<int>{1, 1}, std::vector<int>{2, 1}}) {
                   const auto fs = site_factors(ks, -1, p);
                   const auto prod = shuffle_product(fs[0], fs[1]);
                   const auto swapped =
                       shuffle_product(rho_dual(fs[1]), rho_dual(fs[0]));
                   local = std::max(
                       local, std::abs(swapped.lambda - rho_dual(prod).lambda));
                   const auto tpt = sample_t(
                       prod.k, p,
                       derive_seed(seed, "t" + std::to_string(ks[0])),
                       ctx.cfg.guard);
                   for (const cplx& v : tpt) ctx.digest.fold(v);
                   local = std::max(local, rel_scaled(prod(tpt), swapped(tpt)));
                 }
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"shuffle", "block-multiplier-shift",
       "the product of two quasi-periodic blocks carries the composed "
       "multiplier with its lambda shift",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const EllipticParams p =
             sampled(1, derive_seed(ctx.seed, "lat"), ctx.cfg.guard);
         ctx.digest.fold(p.lattice.tau);
         struct Blocks {
           int kp, np, kd, nd;
         };
         std::vector<Blocks> combos = {{1, 1, 1, 2}, {1, 2, 1, 2}};
         if (ctx.cfg.k_max >= 2) combos.push_back({2, 2, 1, 1});
         int which = 0;
         for (const auto& c : combos) {
           worst = std::max(
               worst, shuffle_multiplier_shift_check(
                          c.kp, c.np, c.kd, c.nd, p.lattice,
                          spread_trials(ctx.cfg.trials, 2),
                          derive_seed(ctx.seed, std::to_string(which++))));
         }
         return worst;
       }});
}

void add_weightfn_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"weightfn", "construction-routes",
       "the iterated-product construction matches the closed summation "
       "formula for every index subset",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 5);
         for (int n = 1; n <= nmax; ++n) {
           const double dev = with_retries(
               ctx, "xc" + std::to_string(n), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 double local = 0.0;
                 for (int k = 0; k <= std::min(ctx.cfg.k_max, n); ++k) {
                   for (const SubsetIndex& I : subsets_of_size(n, k)) {
                     const auto tpt = sample_t(
                         k, p, derive_seed(seed, "t" + std::to_string(k)),
                         ctx.cfg.guard);
                     for (int sign : {-1, 1}) {
                       const Scaled a = omega_weight(I, sign, p)(tpt);
                       const Scaled b = omega_weight_explicit(I, sign, p, tpt);
                       local = std::max(local, rel_scaled(a, b));
                     }
                   }
                 }
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"weightfn", "wheel-vanishing",
       "every weight function vanishes when two arguments pin to (z_a, "
       "z_a - y)",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 5);
         for (int n = 2; n <= nmax; ++n) {
           const double dev = with_retries(
               ctx, "wheel" + std::to_string(n), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 double local = 0.0;
                 const int kcap = std::min({ctx.cfg.k_max, n, 3});
                 for (int k = 2; k <= kcap; ++k) {
                   for (const SubsetIndex& I : subsets_of_size(n, k)) {
                     for (int sign : {-1, 1}) {
                       const auto f = omega_weight(I, sign, p);
                       for (int a = 1; a <= n; ++a) {
                         local = std::max(
                             local,
                             vanishing_deviation(
                                 f, a,
                                 derive_seed(seed, std::to_string(a)),
                                 spread_trials(ctx.cfg.trials, 8)));
                       }
                     }
                   }
                 }
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"weightfn", "exchange-relations",
       "swapping adjacent evaluation points intertwines the weight vectors "
       "through the two 4x4 exchange matrices",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 4);
         for (int n = 2; n <= nmax; ++n) {
           const double dev = with_retries(
               ctx, "exch" + std::to_string(n), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 double local = 0.0;
                 for (int k = 0; k <= std::min(ctx.cfg.k_max, n); ++k) {
                   for (int i = 1; i < n; ++i) {
                     for (int sign : {-1, 1}) {
                       local = std::max(
                           local,
                           exchange_deviation(
                               i, k, sign, p,
                               derive_seed(seed, std::to_string(i) + "-" +
                                                     std::to_string(k))));
                     }
                   }
                 }
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"weightfn", "evaluation-product-form",
       "fully evaluating an n-fold shuffle product along the sites collapses "
       "to an independently computed closed product of thetas",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int reps = spread_trials(ctx.cfg.trials, 4);
         for (int t = 0; t < reps; ++t) {
           const double dev = with_retries(
               ctx, "ev" + std::to_string(t), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(3, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 const cplx y = p.y;
                 double local = 0.0;
                 for (const auto& ks : {std::vector<int>{1, 0, 2},
                                        std::vector<int>{2, 1, 0}}) {
                   const auto fs = site_factors(ks, -1, p);
                   const auto evd = ev_chain(fold_right(fs), p.z, ks);
                   const Scaled got = evd({});
                   cplx want = 1.0;
                   for (int a = 0; a < 3; ++a)
                     for (int s = 1; s <= ks[static_cast<std::size_t>(a)]; ++s)
                       want *= theta(fs[static_cast<std::size_t>(a)].lambda -
                                         static_cast<double>(s) * y,
                                     p.lattice);
                   for (int a = 0; a < 3; ++a) {
                     for (int b = a + 1; b < 3; ++b) {
                       const cplx d = p.z[static_cast<std::size_t>(b)] -
                                      p.z[static_cast<std::size_t>(a)];
                       for (int s = 0; s < ks[static_cast<std::size_t>(b)]; ++s)
                         want *= theta(d - y * static_cast<double>(s),
                                       p.lattice);
                       for (int s = 0; s < ks[static_cast<std::size_t>(a)]; ++s)
                         want *= theta(-d + y * (1.0 - static_cast<double>(s)),
                                       p.lattice);
                       for (int r = 1; r <= ks[static_cast<std::size_t>(a)]; ++r)
                         want *=
                             theta(d + y * static_cast<double>(r), p.lattice) /
                             theta(d + y * static_cast<double>(
                                               r - ks[static_cast<std::size_t>(
                                                       b)]),
                                   p.lattice);
                     }
                   }
                   local = std::max(
                       local, std::abs(got.v - want) /
                                  std::max({got.mag, std::abs(want), 1e-300}));
                 }
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"weightfn", "two-point-exchange-matrices",
       "the change of basis between the (z1,z2) and (z2,z1) weight vectors "
       "reproduces both closed-form 4x4 matrices",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int reps = spread_trials(ctx.cfg.trials, 4);
         for (int t = 0; t < reps; ++t) {
           const double dev = with_retries(
               ctx, "rpm" + std::to_string(t), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(2, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 const auto rp =
                     r_pm_from_weight_functions(p, derive_seed(seed, "s"));
                 const cplx dz = p.z[0] - p.z[1];
                 const Matrix wm = r_minus_gl2(dz, p.y, p.lambda, p.lattice);
                 const Matrix wp = r_plus_gl2(dz, p.y, p.lambda, p.lattice);
                 return std::max(rel_mat(rp.r_minus, wm),
                                 rel_mat(rp.r_plus, wp));
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});
}

void add_orthogonality_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"orthogonality", "gram-diagonal",
       "the residue pairing of the minus and plus families is diagonal with "
       "the displayed theta-product diagonal",
       1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 5);
         for (int n = 1; n <= nmax; ++n) {
           for (int k = 1; k <= std::min(ctx.cfg.k_max, n); ++k) {
             const double dev = with_retries(
                 ctx, "gram" + std::to_string(n) + "-" + std::to_string(k),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const auto pctx = make_pairing_context(p, k, ctx.cfg.guard);
                   const auto gram = orthogonality_matrix(k, pctx);
                   const int dim = static_cast<int>(gram.index.size());
                   double local = 0.0;
                   for (int i = 0; i < dim; ++i) {
                     for (int j = 0; j < dim; ++j) {
                       const cplx expected =
                           (i == j)
                               ? psi_coeff(
                                     gram.index[static_cast<std::size_t>(i)],
                                     p.lambda, p.y, p.lattice)
                               : cplx(0.0, 0.0);
                       const double scale = std::max(
                           {gram.scale, std::abs(expected), 1e-300});
                       local = std::max(
                           local, std::abs(gram.values(i, j) - expected) /
                                      scale);
                     }
                   }
                   return local;
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});

  specs.push_back(
      {"orthogonality", "subset-sum",
       "summing minus times plus values over evaluation subsets, weighted "
       "by the boundary theta product, gives the identity matrix",
       1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 5);
         for (int n = 1; n <= nmax; ++n) {
           for (int k = 1; k <= std::min(ctx.cfg.k_max, n); ++k) {
             const double dev = with_retries(
                 ctx, "sum" + std::to_string(n) + "-" + std::to_string(k),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const auto pctx = make_pairing_context(p, k, ctx.cfg.guard);
                   double local = 0.0;
                   for (const SubsetIndex& I : subsets_of_size(n, k))
                     for (const SubsetIndex& J : subsets_of_size(n, k))
                       local = std::max(local, ortho_sum_check(I, J, pctx));
                   return local;
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});

  specs.push_back(
      {"orthogonality", "dual-subset-sum",
       "summing over the function index instead reproduces delta times the "
       "boundary theta product",
       1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 5);
         for (int n = 1; n <= nmax; ++n) {
           for (int k = 1; k <= std::min(ctx.cfg.k_max, n); ++k) {
             const double dev = with_retries(
                 ctx, "dual" + std::to_string(n) + "-" + std::to_string(k),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const auto pctx = make_pairing_context(p, k, ctx.cfg.guard);
                   double local = 0.0;
                   for (const SubsetIndex& I : subsets_of_size(n, k))
                     for (const SubsetIndex& K : subsets_of_size(n, k))
                       local = std::max(local, ortho_dual_check(I, K, pctx));
                   return local;
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});
}

void add_envelope_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"envelope", "axiomatic-properties",
       "each envelope class passes the multiplier, diagonal-value, divisor "
       "and triangularity characterizations",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::min(ctx.cfg.n, 3);
         const double dev = with_retries(ctx, "ax", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           double local = 0.0;
           for (int k = 0; k <= std::min(ctx.cfg.k_max, n); ++k) {
             for (const SubsetIndex& I : subsets_of_size(n, k)) {
               const auto rep = axiomatic_check(
                   I, p, std::max(3, ctx.cfg.trials / 2),
                   derive_seed(seed, std::to_string(k)));
               local = std::max({local, rep.multiplier_deviation,
                                 rep.diagonal_deviation,
                                 rep.divisor_deviation,
                                 rep.triangularity_deviation});
             }
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});

  specs.push_back(
      {"envelope", "section-multipliers",
       "component values transform under lattice shifts of z, y, lambda by "
       "the section's declared quadratic-form multiplier",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::min(ctx.cfg.n, 3);
         const double dev = with_retries(ctx, "mult", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           double local = 0.0;
           for (int k = 0; k <= std::min(ctx.cfg.k_max, n); ++k) {
             const SubsetIndex I = subsets_of_size(n, k).front();
             local = std::max(
                 local, section_multiplier_check(
                            stab(I, p).section, p.lattice,
                            spread_trials(ctx.cfg.trials, 2),
                            derive_seed(seed, std::to_string(k))));
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});

  specs.push_back(
      {"envelope", "component-gluing",
       "component values of one class agree across the z_b = z_a collision "
       "divisor",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::max(2, std::min(ctx.cfg.n, 3));
         const double dev = with_retries(ctx, "glue", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           const int size = std::max(1, std::min(2, n - 1));
           const SubsetIndex I = subsets_of_size(n, size).front();
           const ComponentSection s = stab(I, p).section;
           double local = 0.0;
           for (int a = 1; a <= n; ++a)
             for (int b = 1; b <= n; ++b)
               if (a != b) local = std::max(local, gluing_check(s, p, a, b));
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});

  specs.push_back(
      {"envelope", "weight-basis-round-trip",
       "expanding a basis function's section recovers the unit coefficient "
       "vector and the same function",
       1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::min(ctx.cfg.n, 3);
         const double dev = with_retries(ctx, "phi", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           double local = 0.0;
           for (int k = 1; k <= std::min(ctx.cfg.k_max, n); ++k) {
             const auto index = subsets_of_size(n, k);
             const SubsetIndex K = index[index.size() / 2];
             const auto f = omega_weight(K, 1, p);
             const auto section = phi_map(f, p);
             const auto exp = phi_inverse(section, p, ctx.cfg.guard);
             for (std::size_t i = 0; i < exp.index.size(); ++i) {
               const cplx want = (exp.index[i] == K) ? 1.0 : 0.0;
               local = std::max(
                   local,
                   std::abs(exp.coeffs(static_cast<Eigen::Index>(i)) - want));
             }
             const auto tpt =
                 sample_t(k, p, derive_seed(seed, std::to_string(k)),
                          ctx.cfg.guard);
             for (const cplx& v : tpt) ctx.digest.fold(v);
             local = std::max(local, rel_scaled(f(tpt), exp.f(tpt)));
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});
}

void add_gz_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"gz", "nested-eigenvectors",
       "the nested product vectors are joint eigenvectors of the diagonal "
       "block and of the full diagonal sum",
       1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 4);
         for (int n = 1; n <= nmax; ++n) {
           const double dev = with_retries(
               ctx, "eig" + std::to_string(n), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 const cplx w = sample_generic_w(p, derive_seed(seed, "w"),
                                                 ctx.cfg.guard);
                 ctx.digest.fold(w);
                 double local = 0.0;
                 for (int k = 0; k <= n; ++k) {
                   for (const SubsetIndex& I : subsets_of_size(n, k)) {
                     local = std::max(local, gz_l22_residual(I, w, p));
                     local = std::max(local, gz_delta_residual(I, w, p));
                   }
                 }
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"gz", "commuting-family",
       "the diagonal-sum operators at different spectral points commute",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 3);
         for (int n = 1; n <= nmax; ++n) {
           const int reps = spread_trials(ctx.cfg.trials, 3 * nmax);
           for (int t = 0; t < reps; ++t) {
             const double dev = with_retries(
                 ctx, "comm" + std::to_string(n) + "-" + std::to_string(t),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const cplx w1 = sample_generic_w(
                       p, derive_seed(seed, "w1"), ctx.cfg.guard);
                   const cplx w2 = sample_generic_w(
                       p, derive_seed(seed, "w2"), ctx.cfg.guard);
                   ctx.digest.fold(w1);
                   ctx.digest.fold(w2);
                   return gz_commutator_deviation(w1, w2, p);
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});

  specs.push_back(
      {"gz", "determinant-scalar",
       "the quantum determinant acts as the scalar product of shifted theta "
       "ratios over the sites",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 3);
         for (int n = 1; n <= nmax; ++n) {
           const double dev = with_retries(
               ctx, "det" + std::to_string(n), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 const cplx w = sample_generic_w(p, derive_seed(seed, "w"),
                                                 ctx.cfg.guard);
                 ctx.digest.fold(w);
                 const Matrix d = quantum_determinant_alg(w, p);
                 cplx scalar = 1.0;
                 for (int a = 0; a < n; ++a)
                   scalar *= theta(w - p.z[static_cast<std::size_t>(a)] + p.y,
                                   p.lattice) /
                             theta(w - p.z[static_cast<std::size_t>(a)],
                                   p.lattice);
                 return rel_mat(d, scalar * Matrix::Identity(1 << n, 1 << n));
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"gz", "single-component-eigensections",
       "the single-component combinations restrict to the displayed theta "
       "product on their component, vanish elsewhere, and are eigensections "
       "of the diagonal operator",
       1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::max(2, std::min(ctx.cfg.n, 3));
         const double dev = with_retries(ctx, "xihat", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           const cplx w =
               sample_generic_w(p, derive_seed(seed, "w"), ctx.cfg.guard);
           ctx.digest.fold(w);
           double local = 0.0;
           for (int k = 1; k <= std::min(ctx.cfg.k_max, n - 1); ++k) {
             const SubsetIndex I = subsets_of_size(n, k).back();
             const ComponentSection xi = xi_hat_section(I, p);
             cplx on_I = 1.0;
             for (int a : I.members)
               for (int b : complement(I).members)
                 on_I *= theta(p.z[static_cast<std::size_t>(a - 1)] -
                                   p.z[static_cast<std::size_t>(b - 1)],
                               p.lattice);
             double scale = std::abs(on_I);
             for (const SubsetIndex& K : xi.index)
               scale = std::max(scale, std::abs(section_value(xi, K, p)));
             for (const SubsetIndex& K : xi.index) {
               const cplx v = section_value(xi, K, p);
               if (K == I)
                 local = std::max(local, rel(v, on_I));
               else
                 local = std::max(local, std::abs(v) / scale);
             }
             const ComponentSection image = apply(geo_L22(n, w), xi);
             cplx eigen = 1.0;
             for (int a : I.members)
               eigen *= theta(w - p.z[static_cast<std::size_t>(a - 1)],
                              p.lattice) /
                        theta(w - p.z[static_cast<std::size_t>(a - 1)] - p.y,
                              p.lattice);
             for (const SubsetIndex& K : xi.index)
               local = std::max(local,
                                std::abs(section_value(image, K, p) -
                                         eigen * section_value(xi, K, p)) /
                                    scale);
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});
}

void add_rll_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"rll", "algebraic-exchange",
       "the tensor operators satisfy the exchange relation driven by the "
       "triangular-normalized R-matrix with its weight shifts",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 3);
         for (int n = 1; n <= nmax; ++n) {
           const int reps = spread_trials(ctx.cfg.trials, 2 * nmax);
           for (int t = 0; t < reps; ++t) {
             const double dev = with_retries(
                 ctx, "alg" + std::to_string(n) + "-" + std::to_string(t),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const cplx w1 = sample_generic_w(
                       p, derive_seed(seed, "w1"), ctx.cfg.guard);
                   const cplx w2 = sample_generic_w(
                       p, derive_seed(seed, "w2"), ctx.cfg.guard);
                   ctx.digest.fold(w1);
                   ctx.digest.fold(w2);
                   return rll_algebraic_deviation(w1, w2, p);
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});

  specs.push_back(
      {"rll", "geometric-exchange",
       "the same exchange relation holds for the geometric difference "
       "operators once scalar insertions carry the dynamical parameter",
       kComposedTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::max(2, std::min(ctx.cfg.n, 3));
         for (int n = 2; n <= nmax; ++n) {
           const int reps = spread_trials(std::min(ctx.cfg.trials, 8), 2);
           for (int t = 0; t < reps; ++t) {
             const double dev = with_retries(
                 ctx, "geo" + std::to_string(n) + "-" + std::to_string(t),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const cplx w1 = sample_generic_w(
                       p, derive_seed(seed, "w1"), ctx.cfg.guard);
                   const cplx w2 = sample_generic_w(
                       p, derive_seed(seed, "w2"), ctx.cfg.guard);
                   ctx.digest.fold(w1);
                   ctx.digest.fold(w2);
                   ComponentSection s =
                       stab(SubsetIndex{n, {1}}, p).section;
                   if (n >= 3)
                     s = combine_sections(
                         {{cplx(0.7, 0.2), s},
                          {cplx(-0.4, 0.9),
                           stab(SubsetIndex{n, {n}}, p).section}});
                   return rll_geometric_check(w1, w2, p, s);
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});

  specs.push_back(
      {"rll", "corner-commutator",
       "the two diagonal corner operators at different spectral points "
       "commute on sections",
       kComposedTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::max(2, std::min(ctx.cfg.n, 3));
         const int reps = spread_trials(std::min(ctx.cfg.trials, 8), 2);
         for (int t = 0; t < reps; ++t) {
           const double dev = with_retries(
               ctx, "corner" + std::to_string(t), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 const cplx w1 = sample_generic_w(p, derive_seed(seed, "w1"),
                                                  ctx.cfg.guard);
                 const cplx w2 = sample_generic_w(p, derive_seed(seed, "w2"),
                                                  ctx.cfg.guard);
                 ctx.digest.fold(w1);
                 ctx.digest.fold(w2);
                 const ComponentSection s =
                     stab(SubsetIndex{n, {1}}, p).section;
                 return rll_corner_commutator_check(w1, w2, p, s);
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"rll", "evaluation-gauge-match",
       "the fixed-point evaluation operator equals the tensor matrix after "
       "the diagonal theta gauge on both indices",
       kComposedTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 3);
         for (int n = 1; n <= nmax; ++n) {
           const int reps = spread_trials(ctx.cfg.trials, 3 * nmax);
           for (int t = 0; t < reps; ++t) {
             const double dev = with_retries(
                 ctx, "gauge" + std::to_string(n) + "-" + std::to_string(t),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const cplx w = sample_generic_w(
                       p, derive_seed(seed, "w"), ctx.cfg.guard);
                   ctx.digest.fold(w);
                   return ell_vs_tensor_check(w, p);
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});

  specs.push_back(
      {"rll", "evaluation-exchange",
       "the evaluation operator satisfies the exchange relation whose "
       "left R-factor carries the lattice-sector weight shift",
       1e-8, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 3);
         for (int n = 1; n <= nmax; ++n) {
           const int reps = spread_trials(std::min(ctx.cfg.trials, 9), 3);
           for (int t = 0; t < reps; ++t) {
             const double dev = with_retries(
                 ctx, "eybe" + std::to_string(n) + "-" + std::to_string(t),
                 [&](std::uint64_t seed) {
                   const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                   ctx.digest.fold(p);
                   const cplx w1 = sample_generic_w(
                       p, derive_seed(seed, "w1"), ctx.cfg.guard);
                   const cplx w2 = sample_generic_w(
                       p, derive_seed(seed, "w2"), ctx.cfg.guard);
                   ctx.digest.fold(w1);
                   ctx.digest.fold(w2);
                   return ell_ybe_check(w1, w2, p);
                 });
             worst = std::max(worst, dev);
           }
         }
         return worst;
       }});
}

void add_consistency_checks(std::vector<CheckSpec>& specs) {
  specs.push_back(
      {"consistency", "generator-action",
       "each geometric generator applied to an envelope class matches the "
       "matrix-coefficient combination of envelope classes",
       kComposedTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int nmax = std::min(ctx.cfg.n, 4);
         for (int n = 1; n <= nmax; ++n) {
           const double dev = with_retries(
               ctx, "eact" + std::to_string(n), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 const cplx w = sample_generic_w(p, derive_seed(seed, "w"),
                                                 ctx.cfg.guard);
                 ctx.digest.fold(w);
                 double local = 0.0;
                 for (int i = 1; i <= 2; ++i)
                   for (int j = 1; j <= 2; ++j)
                     local = std::max(local, e_action_deviation(i, j, w, p));
                 return local;
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"consistency", "diagonal-expansion-route",
       "applying the upper diagonal generator agrees with expanding in the "
       "weight basis, transporting coefficients, and resumming",
       kComposedTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::min(ctx.cfg.n, 2);
         const int reps = spread_trials(std::min(ctx.cfg.trials, 10), 2);
         for (int t = 0; t < reps; ++t) {
           const double dev = with_retries(
               ctx, "l11-" + std::to_string(t), [&](std::uint64_t seed) {
                 const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
                 ctx.digest.fold(p);
                 const cplx w = sample_generic_w(p, derive_seed(seed, "w"),
                                                 ctx.cfg.guard);
                 ctx.digest.fold(w);
                 const ComponentSection s =
                     stab(SubsetIndex{n, {1}}, p).section;
                 return l11_expansion_deviation(w, p, s);
               });
           worst = std::max(worst, dev);
         }
         return worst;
       }});

  specs.push_back(
      {"consistency", "moment-map-sides",
       "left and right scalar insertions differ sector by sector by the "
       "shifted-to-plain theta ratio and both commute with the diagonal "
       "multiplication operator",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::min(ctx.cfg.n, 4);
         const double dev = with_retries(ctx, "mm", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           const auto [ml, mr] = theta_moment_maps(n);
           double local = 0.0;
           for (int k = 0; k <= n; ++k) {
             const SubsetIndex K = subsets_of_size(n, k).front();
             const std::uint32_t m = subset_to_mask(K);
             const cplx left = coeff_at(ml, m, m, p);
             const cplx right = coeff_at(mr, m, m, p);
             const cplx ratio =
                 theta(p.lambda + static_cast<double>(n - 2 * k) * p.y,
                       p.lattice) /
                 theta(p.lambda, p.lattice);
             local = std::max(local, rel(left / right, ratio));
             if (2 * k == n) local = std::max(local, rel(left, right));
           }
           const cplx w =
               sample_generic_w(p, derive_seed(seed, "w"), ctx.cfg.guard);
           ctx.digest.fold(w);
           const DifferenceOperator del = geo_Delta(n, w);
           const ComponentSection s =
               stab(subsets_of_size(n, std::min(2, n)).back(), p).section;
           for (const DifferenceOperator* mm : {&ml, &mr}) {
             const ComponentSection a = apply(compose(*mm, del), s);
             const ComponentSection b = apply(compose(del, *mm), s);
             for (std::size_t i = 0; i < a.index.size(); ++i)
               local = std::max(local, rel(section_value(a, a.index[i], p),
                                           section_value(b, a.index[i], p)));
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});

  specs.push_back(
      {"consistency", "relabeling-equivariance",
       "every generator's coefficients are equivariant under transposing "
       "two evaluation points together with the component labels",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::max(2, std::min(ctx.cfg.n, 3));
         const double dev = with_retries(ctx, "equiv", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           const cplx w =
               sample_generic_w(p, derive_seed(seed, "w"), ctx.cfg.guard);
           ctx.digest.fold(w);
           const auto [ml, mr] = theta_moment_maps(n);
           const std::vector<DifferenceOperator> ops = {
               geo_Delta(n, w), geo_L22(n, w), geo_L12(n, w),
               geo_L21(n, w),   geo_L11(n, w), ml,
               mr};
           double local = 0.0;
           for (const auto& op : ops)
             for (int a = 1; a <= n; ++a)
               for (int b = a + 1; b <= n; ++b)
                 local = std::max(local, equivariance_deviation(op, p, a, b));
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});

  specs.push_back(
      {"consistency", "bundle-multipliers",
       "operator coefficients transform under lattice shifts exactly as the "
       "declared sector bundle forms dictate",
       kDirectTol, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::min(ctx.cfg.n, 2);
         const double dev = with_retries(ctx, "forms", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           const cplx w =
               sample_generic_w(p, derive_seed(seed, "w"), ctx.cfg.guard);
           ctx.digest.fold(w);
           const auto [ml, mr] = theta_moment_maps(n);
           std::vector<DifferenceOperator> ops = {
               geo_Delta(n, w), geo_L22(n, w), geo_L12(n, w),
               geo_L21(n, w),   geo_L11(n, w), ml,
               mr};
           if (ctx.cfg.n >= 3) ops.push_back(geo_L(1, 1, 3, w));
           double local = 0.0;
           int which = 0;
           for (const auto& op : ops) {
             const int rank = (ctx.cfg.n >= 3 && &op == &ops.back()) ? 3 : n;
             local = std::max(
                 local, operator_multiplier_deviation(
                            op, rank, p.lattice,
                            spread_trials(ctx.cfg.trials, 4),
                            derive_seed(seed, std::to_string(which++))));
             if (!bundle_forms_consistent(op)) local = std::max(local, 1.0);
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});

  specs.push_back(
      {"consistency", "collision-boundedness",
       "the lowering operator's image stays bounded as z_b approaches z_a "
       "even though individual coefficient terms blow up",
       2.0, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::max(2, std::min(ctx.cfg.n, 3));
         const double dev = with_retries(ctx, "bound", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           const cplx w =
               sample_generic_w(p, derive_seed(seed, "w"), ctx.cfg.guard);
           ctx.digest.fold(w);
           const SubsetIndex I =
               n >= 3 ? SubsetIndex{n, {1, 2}} : SubsetIndex{n, {1}};
           double local = 0.0;
           for (int b = 2; b <= n; ++b) {
             const auto rep = pole_cancellation_report(w, I, p, 1, b);
             for (int i = 0; i + 1 < 3; ++i) {
               const double lo = std::max(rep.image_scale[static_cast<std::size_t>(i)], 1e-300);
               local = std::max(
                   local, rep.image_scale[static_cast<std::size_t>(i + 1)] / lo);
             }
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});

  specs.push_back(
      {"consistency", "collision-gluing",
       "the mismatch between glued components of the lowering image shrinks "
       "linearly with the collision distance",
       1e-3, [](CheckCtx& ctx) {
         double worst = 0.0;
         const int n = std::max(2, std::min(ctx.cfg.n, 3));
         const double dev = with_retries(ctx, "gap", [&](std::uint64_t seed) {
           const EllipticParams p = sampled(n, seed, ctx.cfg.guard);
           ctx.digest.fold(p);
           const cplx w =
               sample_generic_w(p, derive_seed(seed, "w"), ctx.cfg.guard);
           ctx.digest.fold(w);
           const SubsetIndex I =
               n >= 3 ? SubsetIndex{n, {1, 2}} : SubsetIndex{n, {1}};
           double local = 0.0;
           for (int b = 2; b <= n; ++b) {
             const auto rep = pole_cancellation_report(w, I, p, 1, b);
             local = std::max(local, rep.gluing_gap[2]);
             // the gap must actually shrink with delta, not merely end small
             if (rep.gluing_gap[1] > 0.5 * rep.gluing_gap[0] ||
                 rep.gluing_gap[2] > 0.5 * rep.gluing_gap[1])
               local = std::max(local, 1.0);
           }
           return local;
         });
         worst = std::max(worst, dev);
         return worst;
       }});
}

std::vector<CheckSpec> build_specs() {
  std::vector<CheckSpec> specs;
  add_theta_checks(specs);
  add_ybe_checks(specs);
  add_shuffle_checks(specs);
  add_weightfn_checks(specs);
  add_orthogonality_checks(specs);
  add_envelope_checks(specs);
  add_gz_checks(specs);
  add_rll_checks(specs);
  add_consistency_checks(specs);
  return specs;
}

void validate(const SuiteConfig& cfg) {
  const auto& names = suite_names();
  if (cfg.suite != "all" &&
      std::find(names.begin(), names.end(), cfg.suite) == names.end())
    throw std::invalid_argument("unknown suite '" + cfg.suite + "'");
  if (cfg.n < 1 || cfg.n > 8)
    throw std::invalid_argument("n must lie in 1..8");
  if (cfg.k_max < 0 || cfg.k_max > 4)
    throw std::invalid_argument("k_max must lie in 0..4");
  if (cfg.trials < 1)
    throw std::invalid_argument("trials must be positive");
  if (!(cfg.guard > 0.0))
    throw std::invalid_argument("guard must be positive");
  if (cfg.tol < 0.0)
    throw std::invalid_argument("tol must be nonnegative");
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "theta", "ybe",      "shuffle", "weightfn", "orthogonality",
      "envelope", "gz", "rll",     "consistency"};
  return names;
}

SuiteReport run_suite(const SuiteConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<CheckSpec> specs;
  for (auto& spec : build_specs())
    if (cfg.suite == "all" || cfg.suite == spec.suite)
      specs.push_back(std::move(spec));

  SuiteReport report;
  report.suite = cfg.suite;
  report.config = cfg;
  report.checks.resize(specs.size());

  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      const CheckSpec& spec = specs[i];
      CheckRecord& rec = report.checks[i];
      rec.suite = spec.suite;
      rec.name = spec.name;
      rec.statement = spec.statement;
      rec.tol = cfg.tol > 0.0 ? cfg.tol : spec.tol;
      rec.seed = derive_seed(cfg.seed, spec.suite + "/" + spec.name);
      CheckCtx ctx{cfg, rec.seed, Digest{}};
      try {
        rec.deviation = spec.body(ctx);
        rec.pass = rec.deviation <= rec.tol;
        rec.params_digest = ctx.digest.hex();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t nthreads =
      std::max<std::size_t>(1, std::min<std::size_t>(hw ? hw : 1, specs.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                            [](const CheckRecord& r) { return r.pass; });
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return report;
}

std::string emit_report(const SuiteReport& report, const std::string& format) {
  std::ostringstream out;
  if (format == "json") {
    const SuiteConfig& c = report.config;
    out << "{\n";
    out << "  \"schema\": \"ellqg-report/1\",\n";
    out << "  \"suite\": \"" << json_escape(report.suite) << "\",\n";
    out << "  \"config\": {\"suite\": \"" << json_escape(c.suite)
        << "\", \"n\": " << c.n << ", \"k_max\": " << c.k_max
        << ", \"trials\": " << c.trials << ", \"seed\": \"" << c.seed
        << "\", \"tol\": " << fmt_double(c.tol)
        << ", \"guard\": " << fmt_double(c.guard) << "},\n";
    out << "  \"checks\": [\n";
    for (std::size_t i = 0; i < report.checks.size(); ++i) {
      const CheckRecord& r = report.checks[i];
      out << "    {\"suite\": \"" << json_escape(r.suite) << "\", \"name\": \""
          << json_escape(r.name) << "\", \"statement\": \""
          << json_escape(r.statement) << "\", \"deviation\": "
          << fmt_double(r.deviation) << ", \"tol\": " << fmt_double(r.tol)
          << ", \"pass\": " << (r.pass ? "true" : "false") << ", \"seed\": \""
          << r.seed << "\", \"params_digest\": \"" << r.params_digest << "\"}"
          << (i + 1 < report.checks.size() ? "," : "") << "\n";
    }
    out << "  ],\n";
    out << "  \"pass\": " << (report.pass ? "true" : "false") << "\n";
    out << "}\n";
    return out.str();
  }
  if (format == "text") {
    const SuiteConfig& c = report.config;
    out << "suite=" << report.suite << " n=" << c.n << " k_max=" << c.k_max
        << " trials=" << c.trials << " seed=" << c.seed << " tol="
        << (c.tol > 0.0 ? fmt_short(c.tol) : std::string("default"))
        << " guard=" << fmt_short(c.guard) << "\n";
    std::size_t width = 0;
    for (const CheckRecord& r : report.checks)
      width = std::max(width, r.suite.size() + r.name.size() + 1);
    for (const CheckRecord& r : report.checks) {
      const std::string label = r.suite + "/" + r.name;
      out << (r.pass ? "  ok " : "FAIL ") << label
          << std::string(width - label.size() + 2, ' ') << "dev="
          << fmt_short(r.deviation) << "  tol=" << fmt_short(r.tol)
          << "  digest=" << r.params_digest << "\n";
    }
    std::size_t failed = 0;
    for (const CheckRecord& r : report.checks)
      if (!r.pass) ++failed;
    out << report.checks.size() << " checks, " << report.checks.size() - failed
        << " passed, " << failed << " failed, "
        << fmt_short(report.wall_ms) << " ms\n";
    return out.str();
  }
  throw std::invalid_argument("unknown report format '" + format + "'");
}

}  // namespace ellqg
