#include "ellqg/theta.hpp"

#include <cmath>

namespace ellqg {

namespace {

const cplx kI{0.0, 1.0};

void require_valid(const LatticeParams& lat) {
  if (!(lat.tau.imag() > 0.0))
    throw std::invalid_argument("lattice: Im(tau) must be positive");
  if (lat.truncation_order < 1)
    throw std::invalid_argument("lattice: truncation_order must be >= 1");
}

}  // namespace

cplx quasi_period_multiplier(cplx z, int r, int s, const LatticeParams& lat) {
  require_valid(lat);
  const double ds = static_cast<double>(s);
  cplx m = std::exp(-kI * kPi * lat.tau * ds * ds - 2.0 * kPi * kI * ds * z);
  if ((r + s) % 2 != 0) m = -m;
  return m;
}

cplx theta(cplx z, const LatticeParams& lat) {
  require_valid(lat);
  const double imtau = lat.tau.imag();

  // Reduce along tau first, then along 1, tracking the removed lattice part.
  const int s = static_cast<int>(std::lround(z.imag() / imtau));
  cplx zr = z - static_cast<double>(s) * lat.tau;
  const int r = static_cast<int>(std::lround(zr.real()));
  zr -= static_cast<double>(r);

  const cplx q = std::exp(2.0 * kPi * kI * lat.tau);
  const cplx ep = std::exp(2.0 * kPi * kI * zr);
  const cplx em = 1.0 / ep;

  cplx prod = std::sin(kPi * zr) / kPi;
  cplx qj = 1.0;
  for (int j = 1; j <= lat.truncation_order; ++j) {
    qj *= q;
    const cplx d = 1.0 - qj;
    prod *= (1.0 - qj * ep) * (1.0 - qj * em) / (d * d);
  }

  if (r == 0 && s == 0) return prod;
  return quasi_period_multiplier(zr, r, s, lat) * prod;
}

cplx theta_derivative_at_zero(const LatticeParams& lat, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("theta': step must be positive");
  return (theta(cplx{step, 0.0}, lat) - theta(cplx{-step, 0.0}, lat)) /
         (2.0 * step);
}

double Rng::unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::range(double lo, double hi) { return lo + (hi - lo) * unit(); }

cplx Rng::box(double re_lo, double re_hi, double im_lo, double im_hi) {
  const double re = range(re_lo, re_hi);
  return cplx{re, range(im_lo, im_hi)};
}

std::uint64_t Rng::next_u64() {
  // splitmix64: tiny, fast, and identical on every platform.
  std::uint64_t x = (state_ += 0x9e3779b97f4a7c15ull);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  h ^= master + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h ? h : 1;
}

EllipticParams sample_generic_params(int n, std::uint64_t seed,
                                     const SampleOptions& opt) {
  if (n < 0) throw std::invalid_argument("sample_generic_params: n < 0");
  Rng rng(seed);

  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    EllipticParams p;
    p.lattice.tau = cplx{rng.range(-0.4, 0.4), rng.range(opt.im_tau_min, opt.im_tau_max)};
    const double h = p.lattice.tau.imag();
    auto draw = [&] { return rng.box(-0.5, 0.5, -0.45 * h, 0.45 * h); };
    p.y = draw();
    p.lambda = draw();
    p.z.resize(static_cast<std::size_t>(n));
    for (auto& za : p.z) za = draw();

    auto clear = [&](cplx arg) {
      return std::abs(theta(arg, p.lattice)) > opt.guard;
    };
    bool ok = true;
    for (int a = 0; a < n && ok; ++a)
      for (int b = 0; b < n && ok; ++b) {
        if (a == b) continue;
        for (int s = -n; s <= n && ok; ++s)
          ok = clear(p.z[static_cast<std::size_t>(a)] -
                     p.z[static_cast<std::size_t>(b)] -
                     static_cast<double>(s) * p.y);
      }
    for (int j = -2 * n; j <= 2 * n && ok; ++j)
      ok = clear(p.lambda - static_cast<double>(j) * p.y);
    for (int j = 1; j <= 2 * n && ok; ++j)
      ok = clear(static_cast<double>(j) * p.y);
    if (ok) ok = clear(p.y);
    if (ok) return p;
  }
  throw sampling_error("sample_generic_params: attempt budget exhausted (n=" +
                       std::to_string(n) + ")");
}

cplx sample_generic_w(const EllipticParams& params, std::uint64_t seed,
                      double guard) {
  Rng rng(seed);
  const double h = params.lattice.tau.imag();
  for (int attempt = 0; attempt < 2000; ++attempt) {
    const cplx w = rng.box(-0.5, 0.5, -0.45 * h, 0.45 * h);
    bool ok = true;
    for (const cplx& za : params.z)
      for (int s = -2; s <= 2 && ok; ++s)
        ok = std::abs(theta(w - za - static_cast<double>(s) * params.y,
                            params.lattice)) > guard;
    if (ok) return w;
  }
  throw sampling_error("sample_generic_w: attempt budget exhausted");
}

}  // namespace ellqg
