#include "ellqg/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ellqg/pairing.hpp"

namespace ellqg {

namespace {

constexpr double kPoleFloor = 1e-12;
// Comparisons between values that cancelled far below the size of the terms
// that produced them carry no information; floor the denominator there.
constexpr double kCancelFloor = 1e-6;

double compare(const Scaled& lhs, const Scaled& rhs) {
  const double scale =
      std::max({std::abs(lhs.v), std::abs(rhs.v),
                kCancelFloor * std::max(lhs.mag, rhs.mag), 1e-300});
  return std::abs(lhs.v - rhs.v) / scale;
}

void require_form_shape(const QuadraticFormSpec& q, const char* where) {
  if (q.N.rows() != q.p || q.N.cols() != q.p ||
      q.v.size() != static_cast<Eigen::Index>(q.p))
    throw std::invalid_argument(std::string(where) +
                                ": form data does not match its dimension");
}

void check_index(const QuadraticFormSpec& q, int i, const char* where) {
  if (i < 0 || i >= q.p)
    throw std::invalid_argument(std::string(where) + ": index out of range");
}

void require_block_args(int k_prime, int n_prime, int k_dprime, int n_dprime,
                        const char* where) {
  if (k_prime < 0 || k_dprime < 0 || n_prime < k_prime || n_dprime < k_dprime)
    throw std::invalid_argument(std::string(where) + ": bad block sizes");
}

// Substitution matrix for the twisting layout (t, s, y, lambda) with
// t = z_K, s = z over the complement.
Eigen::MatrixXi twisting_restriction_matrix(int n, const SubsetIndex& K) {
  const int k = K.k();
  const SubsetIndex Kbar = complement(K);
  Eigen::MatrixXi S = Eigen::MatrixXi::Zero(n + 2, n + 2);
  for (int i = 0; i < k; ++i)
    S(i, K.members[static_cast<std::size_t>(i)] - 1) = 1;
  for (int j = 0; j < n - k; ++j)
    S(k + j, Kbar.members[static_cast<std::size_t>(j)] - 1) = 1;
  S(n, n) = 1;
  S(n + 1, n + 1) = 1;
  return S;
}

int component_position(const ComponentSection& s, const SubsetIndex& K) {
  for (std::size_t i = 0; i < s.index.size(); ++i)
    if (s.index[i] == K) return static_cast<int>(i);
  throw std::invalid_argument("section: no component for that subset");
}

}  // namespace

QuadraticFormSpec zero_form(int p) {
  if (p < 0) throw std::invalid_argument("zero_form: negative dimension");
  QuadraticFormSpec q;
  q.p = p;
  q.N = Eigen::MatrixXi::Zero(p, p);
  q.v = Eigen::VectorXcd::Zero(p);
  return q;
}

void add_theta_factor(QuadraticFormSpec& q,
                      const std::vector<std::pair<int, int>>& terms,
                      cplx shift, int mult) {
  require_form_shape(q, "add_theta_factor");
  for (const auto& [idx, coeff] : terms) {
    check_index(q, idx, "add_theta_factor");
    (void)coeff;
  }
  for (const auto& [i, ci] : terms) {
    for (const auto& [j, cj] : terms) q.N(i, j) += mult * ci * cj;
    q.v(i) += static_cast<double>(mult * ci) * shift;
  }
}

void add_cross_term(QuadraticFormSpec& q, int i, int j, int mult) {
  require_form_shape(q, "add_cross_term");
  check_index(q, i, "add_cross_term");
  check_index(q, j, "add_cross_term");
  if (i == j)
    throw std::invalid_argument("add_cross_term: equal indices");
  q.N(i, j) += mult;
  q.N(j, i) += mult;
}

void add_diag_term(QuadraticFormSpec& q, int i, int mult) {
  require_form_shape(q, "add_diag_term");
  check_index(q, i, "add_diag_term");
  q.N(i, i) += mult;
}

QuadraticFormSpec add_forms(const QuadraticFormSpec& a,
                            const QuadraticFormSpec& b) {
  require_form_shape(a, "add_forms");
  require_form_shape(b, "add_forms");
  if (a.p != b.p)
    throw std::invalid_argument("add_forms: dimension mismatch");
  QuadraticFormSpec q = a;
  q.N += b.N;
  q.v += b.v;
  return q;
}

QuadraticFormSpec substitute_form(const QuadraticFormSpec& q,
                                  const Eigen::MatrixXi& S, int p_new) {
  require_form_shape(q, "substitute_form");
  if (S.rows() != q.p || S.cols() != p_new)
    throw std::invalid_argument("substitute_form: substitution shape");
  QuadraticFormSpec out;
  out.p = p_new;
  out.N = S.transpose() * q.N * S;
  out.v = S.cast<cplx>().transpose() * q.v;
  return out;
}

double multiplier_check(
    const std::function<Scaled(const std::vector<cplx>&)>& f,
    const QuadraticFormSpec& spec, const LatticeParams& lat, int trials,
    std::uint64_t seed) {
  require_form_shape(spec, "multiplier_check");
  if (trials <= 0)
    throw std::invalid_argument("multiplier_check: need at least one trial");
  if (spec.p == 0) return 0.0;

  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<cplx> x(static_cast<std::size_t>(spec.p));
    for (auto& c : x) c = rng.box(-0.45, 0.45, -0.45, 0.45);
    const Scaled base = f(x);

    for (int j = 0; j < spec.p; ++j) {
      const double parity = (spec.N(j, j) % 2 != 0) ? -1.0 : 1.0;

      std::vector<cplx> x1 = x;
      x1[static_cast<std::size_t>(j)] += 1.0;
      worst = std::max(worst,
                       compare(f(x1), Scaled(parity * base.v, base.mag)));

      cplx row = spec.v(j);
      for (int m = 0; m < spec.p; ++m)
        row += static_cast<double>(spec.N(j, m)) * x[static_cast<std::size_t>(m)];
      const cplx factor =
          parity * std::exp(cplx(0.0, -2.0 * kPi) * row +
                            cplx(0.0, -kPi) * lat.tau *
                                static_cast<double>(spec.N(j, j)));
      std::vector<cplx> xt = x;
      xt[static_cast<std::size_t>(j)] += lat.tau;
      worst = std::max(
          worst,
          compare(f(xt), Scaled(factor * base.v, std::abs(factor) * base.mag)));
    }
  }
  return worst;
}

QuadraticFormSpec twisting_form(int k, int n) {
  if (k < 0 || n < k) throw std::invalid_argument("twisting_form: bad sizes");
  QuadraticFormSpec q = zero_form(n + 2);
  const int iy = n, il = n + 1;
  for (int i = 0; i < k; ++i) {
    add_cross_term(q, i, il, 1);
    if (n - k != 0) add_cross_term(q, i, iy, n - k);
    for (int j = 0; j < n - k; ++j) add_theta_factor(q, {{i, 1}, {k + j, -1}}, 0.0);
  }
  return q;
}

QuadraticFormSpec theta_space_form(int k, int n) {
  if (k < 0 || n < 0)
    throw std::invalid_argument("theta_space_form: bad sizes");
  QuadraticFormSpec q = zero_form(k + n + 2);
  const int iy = k + n, il = k + n + 1;
  for (int i = 0; i < k; ++i) {
    add_cross_term(q, i, il, 1);
    if (n - k != 0) add_cross_term(q, i, iy, n - k);
    for (int a = 0; a < n; ++a) add_theta_factor(q, {{i, 1}, {k + a, -1}}, 0.0);
  }
  if (k > 1) add_diag_term(q, iy, k * (k - 1));
  return q;
}

QuadraticFormSpec weight_class_form(const SubsetIndex& I) {
  const int n = I.n, k = I.k();
  const SubsetIndex Ibar = complement(I);
  QuadraticFormSpec q = zero_form(n + 2);
  const int iy = n, il = n + 1;

  int diag = k * (n - k);
  for (int a = 1; a <= n; ++a) {
    if (I.contains(a)) {
      add_cross_term(q, a - 1, il, -1);
      const int above = count_above(a, Ibar);
      if (above != 0) add_cross_term(q, a - 1, iy, -above);
      diag -= above;
      const int w = weight_index(a, I);
      add_theta_factor(q, {{il, 1}, {iy, -(w + 1)}}, 0.0, -1);
    } else {
      const int above = count_above(a, I);
      if (above != 0) add_cross_term(q, a - 1, iy, -above);
    }
  }
  if (diag != 0) add_diag_term(q, iy, diag);
  return q;
}

QuadraticFormSpec omega_plus_full_form(const SubsetIndex& I) {
  const int n = I.n, k = I.k();
  QuadraticFormSpec q = zero_form(k + n + 2);
  const int iy = k + n, il = k + n + 1;

  for (int r = 0; r < k; ++r) {
    const int ir = I.members[static_cast<std::size_t>(r)];
    const int w = weight_index(ir, I);
    for (int a = 1; a <= n; ++a) {
      const int za = k + a - 1;
      if (a < ir)
        add_theta_factor(q, {{r, 1}, {za, -1}, {iy, 1}}, 0.0);
      else if (a > ir)
        add_theta_factor(q, {{r, 1}, {za, -1}}, 0.0);
      else
        add_theta_factor(q, {{il, 1}, {r, 1}, {za, -1}, {iy, -w}}, 0.0);
    }
  }
  // Symmetrization denominators, one unordered pair each ...
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      add_theta_factor(q, {{i, 1}, {j, -1}}, 0.0, -1);
      add_theta_factor(q, {{j, 1}, {i, -1}, {iy, 1}}, 0.0, -1);
    }
  // ... and the ordered-pair normalization that turns w^+ into omega^+.
  for (int j = 0; j < k; ++j)
    for (int l = 0; l < k; ++l)
      if (j != l) add_theta_factor(q, {{j, 1}, {l, -1}, {iy, 1}}, 0.0);
  return q;
}

QuadraticFormSpec psi_form(const SubsetIndex& I) {
  const int n = I.n;
  QuadraticFormSpec q = zero_form(n + 2);
  const int iy = n, il = n + 1;
  for (int j : I.members) {
    const int w = weight_index(j, I);
    add_theta_factor(q, {{il, 1}, {iy, -w}}, 0.0);
    add_theta_factor(q, {{il, 1}, {iy, -(w + 1)}}, 0.0);
  }
  return q;
}

QuadraticFormSpec shuffle_shift_form(int k_prime, int n_prime, int k_dprime,
                                     int n_dprime) {
  require_block_args(k_prime, n_prime, k_dprime, n_dprime,
                     "shuffle_shift_form");
  const int k = k_prime + k_dprime, n = n_prime + n_dprime;
  QuadraticFormSpec q = zero_form(k + n + 2);
  if (k_dprime == 0) return q;
  const int iy = k + n;
  if (n_prime - k_prime != 0)
    add_diag_term(q, iy, k_dprime * (n_prime - k_prime));
  for (int a = 1; a <= n_prime; ++a)
    add_cross_term(q, k + a - 1, iy, -k_dprime);
  return q;
}

QuadraticFormSpec shuffle_kernel_form(int k_prime, int n_prime, int k_dprime,
                                      int n_dprime) {
  require_block_args(k_prime, n_prime, k_dprime, n_dprime,
                     "shuffle_kernel_form");
  const int k = k_prime + k_dprime, n = n_prime + n_dprime;
  QuadraticFormSpec q = zero_form(k + n + 2);
  const int iy = k + n;
  for (int j = 0; j < k_prime; ++j)
    for (int l = k_prime; l < k; ++l) {
      add_theta_factor(q, {{j, 1}, {l, -1}, {iy, 1}}, 0.0);
      add_theta_factor(q, {{j, 1}, {l, -1}}, 0.0, -1);
    }
  for (int l = k_prime; l < k; ++l)
    for (int a = 1; a <= n_prime; ++a)
      add_theta_factor(q, {{l, 1}, {k + a - 1, -1}, {iy, 1}}, 0.0);
  for (int j = 0; j < k_prime; ++j)
    for (int b = n_prime + 1; b <= n; ++b)
      add_theta_factor(q, {{j, 1}, {k + b - 1, -1}}, 0.0);
  return q;
}

Eigen::MatrixXi shuffle_block_embedding(int k_prime, int n_prime, int k_dprime,
                                        int n_dprime, int block) {
  require_block_args(k_prime, n_prime, k_dprime, n_dprime,
                     "shuffle_block_embedding");
  if (block != 1 && block != 2)
    throw std::invalid_argument("shuffle_block_embedding: block is 1 or 2");
  const int k = k_prime + k_dprime, n = n_prime + n_dprime;
  const int kb = block == 1 ? k_prime : k_dprime;
  const int nb = block == 1 ? n_prime : n_dprime;
  Eigen::MatrixXi S = Eigen::MatrixXi::Zero(kb + nb + 2, k + n + 2);
  const int t_off = block == 1 ? 0 : k_prime;
  const int z_off = block == 1 ? 0 : n_prime;
  for (int i = 0; i < kb; ++i) S(i, t_off + i) = 1;
  for (int a = 0; a < nb; ++a) S(kb + a, k + z_off + a) = 1;
  S(kb + nb, k + n) = 1;
  S(kb + nb + 1, k + n + 1) = 1;
  if (block == 1) S(kb + nb + 1, k + n) = n_dprime - 2 * k_dprime;
  return S;
}

cplx section_value(const ComponentSection& s, const SubsetIndex& K,
                   const EllipticParams& params) {
  if (params.n() != s.n)
    throw std::invalid_argument("section_value: ambient mismatch");
  return s.values[static_cast<std::size_t>(component_position(s, K))](params).v;
}

double section_multiplier_check(const ComponentSection& s,
                                const LatticeParams& lat, int trials,
                                std::uint64_t seed) {
  if (s.index.size() != s.values.size() || s.base_form.p != s.n + 2)
    throw std::invalid_argument("section_multiplier_check: malformed section");
  const QuadraticFormSpec twist = twisting_form(s.k, s.n);
  double worst = 0.0;
  for (std::size_t ci = 0; ci < s.index.size(); ++ci) {
    const QuadraticFormSpec full = add_forms(
        s.base_form,
        substitute_form(twist, twisting_restriction_matrix(s.n, s.index[ci]),
                        s.n + 2));
    const auto& value = s.values[ci];
    const int n = s.n;
    auto as_params = [&value, &lat, n](const std::vector<cplx>& x) {
      EllipticParams p;
      p.lattice = lat;
      p.z.assign(x.begin(), x.begin() + n);
      p.y = x[static_cast<std::size_t>(n)];
      p.lambda = x[static_cast<std::size_t>(n + 1)];
      return value(p);
    };
    worst = std::max(
        worst, multiplier_check(as_params, full, lat, trials,
                                derive_seed(seed, std::to_string(ci))));
  }
  return worst;
}

double gluing_check(const ComponentSection& s, const EllipticParams& params,
                    int a, int b) {
  if (params.n() != s.n)
    throw std::invalid_argument("gluing_check: ambient mismatch");
  if (a < 1 || b < 1 || a > s.n || b > s.n || a == b)
    throw std::invalid_argument("gluing_check: bad point pair");

  EllipticParams glued = params;
  glued.z[static_cast<std::size_t>(b - 1)] =
      glued.z[static_cast<std::size_t>(a - 1)];

  double worst = 0.0;
  for (std::size_t ci = 0; ci < s.index.size(); ++ci) {
    const SubsetIndex& K = s.index[ci];
    if (!K.contains(a) || K.contains(b)) continue;
    std::vector<int> swapped;
    for (int m : K.members) swapped.push_back(m == a ? b : m);
    std::sort(swapped.begin(), swapped.end());
    const int cj = component_position(s, SubsetIndex(s.n, swapped));
    worst = std::max(worst, compare(s.values[ci](glued),
                                    s.values[static_cast<std::size_t>(cj)](glued)));
  }
  return worst;
}

StableEnvelopeClass stab(const SubsetIndex& I, const EllipticParams& params) {
  const int n = params.n();
  if (I.n != n) throw std::invalid_argument("stab: ambient mismatch");
  if (std::abs(psi_coeff(I, params.lambda, params.y, params.lattice)) <
      kPoleFloor)
    throw pole_error("stab: psi_I vanishes at these parameters");

  ComponentSection s;
  s.n = n;
  s.k = I.k();
  s.index = subsets_of_size(n, s.k);
  for (const SubsetIndex& J : s.index)
    s.values.emplace_back([I, J](const EllipticParams& p) {
      return normalized_w(I, +1, p, z_at(p, J));
    });
  s.base_form = weight_class_form(I);
  return {I, s};
}

AxiomaticReport axiomatic_check(const SubsetIndex& I,
                                const EllipticParams& params, int samples,
                                std::uint64_t seed) {
  if (samples <= 0)
    throw std::invalid_argument("axiomatic_check: need at least one sample");
  const StableEnvelopeClass cls = stab(I, params);
  const int n = params.n();
  const SubsetIndex Ibar = complement(I);

  AxiomaticReport report;
  report.multiplier_deviation = section_multiplier_check(
      cls.section, params.lattice, samples, derive_seed(seed, "mult"));

  for (int i = 0; i < samples; ++i) {
    const EllipticParams p =
        i == 0 ? params
               : sample_generic_params(
                     n, derive_seed(seed, "diag:" + std::to_string(i)));
    cplx expected = 1.0;
    for (int a : I.members)
      for (int b : Ibar.members)
        expected *= theta(p.z[static_cast<std::size_t>(a - 1)] -
                              p.z[static_cast<std::size_t>(b - 1)] +
                              static_cast<double>(epsilon(a, b)) * p.y,
                          p.lattice);
    for (int a : I.members)
      expected /= theta(
          p.lambda - static_cast<double>(weight_index(a, I) + 1) * p.y,
          p.lattice);
    report.diagonal_deviation =
        std::max(report.diagonal_deviation,
                 compare(normalized_w(I, +1, p, z_at(p, I)), Scaled(expected)));

    for (const SubsetIndex& J : cls.section.index) {
      if (subset_leq(J, I)) continue;
      const Scaled off = normalized_w(I, +1, p, z_at(p, J));
      report.triangularity_deviation =
          std::max(report.triangularity_deviation,
                   std::abs(off.v) / std::max(off.mag, 1e-300));
    }
  }

  for (const SubsetIndex& J : cls.section.index)
    for (int a : J.members)
      for (int b = 1; b < a; ++b) {
        if (J.contains(b)) continue;
        for (int i = 0; i < samples; ++i) {
          EllipticParams p = sample_generic_params(
              n, derive_seed(seed, "div:" + std::to_string(subset_to_mask(J)) +
                                       ":" + std::to_string(a) + ":" +
                                       std::to_string(b) + ":" +
                                       std::to_string(i)));
          const Scaled psi =
              Scaled(psi_coeff(I, p.lambda, p.y, p.lattice));
          // Scale from the unconstrained point: a residual that vanishes
          // through a small theta factor rather than through cancellation
          // still has mag equal to its own tiny value.
          const Scaled generic = normalized_w(I, +1, p, z_at(p, J)) * psi;
          p.z[static_cast<std::size_t>(a - 1)] =
              p.z[static_cast<std::size_t>(b - 1)] - p.y;
          const Scaled residual = normalized_w(I, +1, p, z_at(p, J)) * psi;
          report.divisor_deviation = std::max(
              report.divisor_deviation,
              std::abs(residual.v) / std::max({std::abs(generic.v),
                                               generic.mag, residual.mag,
                                               1e-300}));
        }
      }

  return report;
}

ComponentSection phi_map(const ThetaSymFn& f, const EllipticParams& params) {
  if (f.sign != +1)
    throw std::invalid_argument("phi_map: plus-family input required");
  const int n = params.n();
  if (f.n() != n) throw std::invalid_argument("phi_map: ambient mismatch");

  ComponentSection s;
  s.n = n;
  s.k = f.k;
  s.index = subsets_of_size(n, f.k);
  for (const SubsetIndex& K : s.index)
    s.values.emplace_back([f, K](const EllipticParams& p) {
      const std::vector<cplx> t = z_at(p, K);
      cplx den = 1.0;
      for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j)
          if (i != j) den *= theta(t[i] - t[j] + p.y, p.lattice);
      if (std::abs(den) < kPoleFloor)
        throw pole_error("phi_map: pair product vanishes on this component");
      const Scaled v = f(t);
      return Scaled(v.v / den, v.mag / std::abs(den));
    });
  s.base_form = zero_form(n + 2);
  return s;
}

PhiExpansion phi_inverse(const ComponentSection& s,
                         const EllipticParams& params, double guard) {
  const int n = s.n, k = s.k;
  if (params.n() != n)
    throw std::invalid_argument("phi_inverse: ambient mismatch");
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b &&
          std::abs(theta(params.z[static_cast<std::size_t>(a)] -
                             params.z[static_cast<std::size_t>(b)] + params.y,
                         params.lattice)) <= guard)
        throw std::invalid_argument(
            "phi_inverse: parameters sit near a z_a = z_b + y wall");
  for (int j = -n; j <= n; ++j)
    if (std::abs(theta(params.lambda - static_cast<double>(j) * params.y,
                       params.lattice)) <= guard)
      throw std::invalid_argument(
          "phi_inverse: lambda sits near an integer multiple of y");

  PhiExpansion out;
  out.index = subsets_of_size(n, k);
  out.coeffs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(out.index.size()));

  std::vector<cplx> restrictions(s.index.size());
  for (std::size_t i = 0; i < s.index.size(); ++i)
    restrictions[i] = s.values[i](params).v;

  std::vector<ThetaSymFn> basis;
  for (std::size_t kc = 0; kc < out.index.size(); ++kc) {
    const SubsetIndex& K = out.index[kc];
    cplx acc = 0.0;
    for (std::size_t ic = 0; ic < s.index.size(); ++ic) {
      const SubsetIndex& I = s.index[ic];
      acc += normalized_w(K, -1, params, z_at(params, I)).v *
             restrictions[ic] / boundary_theta_product(I, params);
    }
    out.coeffs(static_cast<Eigen::Index>(kc)) =
        acc / psi_coeff(K, params.lambda, params.y, params.lattice);
    basis.push_back(omega_weight(K, +1, params));
  }

  ThetaSymFn f;
  f.k = k;
  f.sign = +1;
  f.lambda = params.lambda;
  f.y = params.y;
  f.z = params.z;
  f.lattice = params.lattice;
  const Eigen::VectorXcd coeffs = out.coeffs;
  f.eval = [basis, coeffs](const std::vector<cplx>& t) {
    Scaled acc;
    for (std::size_t i = 0; i < basis.size(); ++i)
      acc += Scaled(coeffs(static_cast<Eigen::Index>(i))) * basis[i](t);
    return acc;
  };
  out.f = f;
  return out;
}

double shuffle_multiplier_shift_check(int k_prime, int n_prime, int k_dprime,
                                      int n_dprime, const LatticeParams& lat,
                                      int trials, std::uint64_t seed) {
  require_block_args(k_prime, n_prime, k_dprime, n_dprime,
                     "shuffle_multiplier_shift_check");
  if (n_prime < 1 || n_dprime < 1)
    throw std::invalid_argument(
        "shuffle_multiplier_shift_check: empty z block");
  const int k = k_prime + k_dprime, n = n_prime + n_dprime;
  const int p = k + n + 2;

  std::vector<int> left, right;
  for (int i = 1; i <= k_prime; ++i) left.push_back(i);
  for (int i = 1; i <= k_dprime; ++i) right.push_back(i);
  const SubsetIndex I1(n_prime, left), I2(n_dprime, right);

  QuadraticFormSpec declared =
      add_forms(theta_space_form(k, n),
                shuffle_shift_form(k_prime, n_prime, k_dprime, n_dprime));
  QuadraticFormSpec d1 = omega_plus_full_form(I1);
  const QuadraticFormSpec t1 = theta_space_form(k_prime, n_prime);
  d1.N -= t1.N;
  d1.v -= t1.v;
  QuadraticFormSpec d2 = omega_plus_full_form(I2);
  const QuadraticFormSpec t2 = theta_space_form(k_dprime, n_dprime);
  d2.N -= t2.N;
  d2.v -= t2.v;
  declared = add_forms(
      declared,
      substitute_form(d1,
                      shuffle_block_embedding(k_prime, n_prime, k_dprime,
                                              n_dprime, 1),
                      p));
  declared = add_forms(
      declared,
      substitute_form(d2,
                      shuffle_block_embedding(k_prime, n_prime, k_dprime,
                                              n_dprime, 2),
                      p));

  auto family = [&, I1, I2](const std::vector<cplx>& x) {
    const std::vector<cplx> t(x.begin(), x.begin() + k);
    const std::vector<cplx> z1(x.begin() + k, x.begin() + k + n_prime);
    const std::vector<cplx> z2(x.begin() + k + n_prime, x.begin() + k + n);
    const cplx y = x[static_cast<std::size_t>(k + n)];
    const cplx lambda = x[static_cast<std::size_t>(k + n + 1)];

    EllipticParams p1;
    p1.lattice = lat;
    p1.y = y;
    p1.lambda = lambda + static_cast<double>(n_dprime - 2 * k_dprime) * y;
    p1.z = z1;
    EllipticParams p2;
    p2.lattice = lat;
    p2.y = y;
    p2.lambda = lambda;
    p2.z = z2;

    const ThetaSymFn f1 = omega_weight(I1, +1, p1);
    const ThetaSymFn f2 = omega_weight(I2, +1, p2);
    return shuffle_eval(f1, f2, +1, z1, z2, y, lat, t);
  };

  return multiplier_check(family, declared, lat, trials, seed);
}

}  // namespace ellqg
