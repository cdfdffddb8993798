#include "ellqg/action.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace ellqg {

namespace {

constexpr double kGuard = 1e-12;
constexpr double kTiny = 1e-300;

cplx th(cplx x, const LatticeParams& lat) { return theta(x, lat); }

cplx th_g(cplx x, const LatticeParams& lat, const char* what) {
  const cplx v = theta(x, lat);
  if (std::abs(v) < kGuard)
    throw pole_error(std::string(what) + ": theta factor near zero");
  return v;
}

Scaled scaled_div(const Scaled& a, cplx d) {
  return Scaled(a.v / d, a.mag / std::abs(d));
}

using EntryKey = std::pair<std::uint32_t, std::uint32_t>;
using EntryFn = std::function<Scaled(const EllipticParams&)>;
using ValueFn =
    std::function<Scaled(const SubsetIndex& K, const EllipticParams&)>;
using FormFn = std::function<QuadraticFormSpec(const SubsetIndex& K)>;

int mask_popcount(std::uint32_t m) { return std::popcount(m); }

QuadraticFormSpec negate_form(QuadraticFormSpec q) {
  q.N = -q.N;
  q.v = -q.v;
  return q;
}

bool forms_equal(const QuadraticFormSpec& a, const QuadraticFormSpec& b,
                 double tol) {
  if (a.p != b.p) return false;
  if (a.N != b.N) return false;
  const double scale = 1.0 + std::max(a.v.cwiseAbs().maxCoeff(),
                                      b.v.cwiseAbs().maxCoeff());
  return (a.v - b.v).cwiseAbs().maxCoeff() <= tol * scale;
}

// The bundle part shared by a whole sector: raw entry data minus the output
// twisting restriction plus the input one read at lambda + nu*y.
QuadraticFormSpec normalized_sector_form(const QuadraticFormSpec& raw,
                                         const SubsetIndex& K_out,
                                         const SubsetIndex& K_in, int nu) {
  QuadraticFormSpec f = add_forms(raw, negate_form(restricted_twisting(K_out)));
  return add_forms(f, lambda_shift_form(restricted_twisting(K_in), nu));
}

// Component-diagonal operator with an arbitrary dynamical shift.
DifferenceOperator diagonal_generic(int n, int nu, const ValueFn& value,
                                    const FormFn& form) {
  if (n < 1) throw std::invalid_argument("diagonal operator: need n >= 1");
  DifferenceOperator op;
  op.n = n;
  op.mu = 0;
  op.nu = nu;
  for (int k = 0; k <= n; ++k) {
    for (const SubsetIndex& K : subsets_of_size(n, k)) {
      const std::uint32_t m = subset_to_mask(K);
      op.coefficients[{m, m}] = [value, K](const EllipticParams& p) {
        return value(K, p);
      };
      if (form) {
        const QuadraticFormSpec raw = form(K);
        op.entry_form[{m, m}] = raw;
        if (!op.bundle_form.count(k))
          op.bundle_form[k] = normalized_sector_form(raw, K, K, nu);
      }
    }
  }
  return op;
}

std::set<int> sectors_with_entries(const DifferenceOperator& op) {
  std::set<int> s;
  for (const auto& entry : op.coefficients)
    s.insert(mask_popcount(entry.first.second));
  return s;
}

// ---------------------------------------------------------------------------
// Geometric generator internals. The spectral parameter enters every
// coefficient as w + off*y with an integer offset, so the determinant
// assembly of the diagonal generator can request the shifted-argument
// versions without knowing y; the offset folds into the y-column of the
// form data.
// ---------------------------------------------------------------------------

DifferenceOperator delta_off(int n, cplx w, int off) {
  auto value = [n, w, off](const SubsetIndex&, const EllipticParams& p) {
    const cplx we = w + static_cast<double>(off) * p.y;
    cplx v = 1.0;
    for (int i = 1; i <= n; ++i) {
      v *= th(we - p.z[i - 1] + p.y, p.lattice);
      v /= th_g(we - p.z[i - 1], p.lattice, "geo_Delta");
    }
    return Scaled(v);
  };
  auto form = [n, w, off](const SubsetIndex&) {
    QuadraticFormSpec q = zero_form(n + 2);
    for (int i = 1; i <= n; ++i) {
      add_theta_factor(q, {{i - 1, -1}, {n, off + 1}}, w, +1);
      add_theta_factor(q, {{i - 1, -1}, {n, off}}, w, -1);
    }
    return q;
  };
  return diagonal_generic(n, 0, value, form);
}

DifferenceOperator l22_off(int n, cplx w, int off, bool inverse) {
  auto value = [n, w, off, inverse](const SubsetIndex& K,
                                    const EllipticParams& p) {
    const cplx we = w + static_cast<double>(off) * p.y;
    cplx v = 1.0;
    for (int i : K.members) {
      const cplx plain = we - p.z[i - 1];
      if (inverse)
        v *= th(plain - p.y, p.lattice) / th_g(plain, p.lattice, "geo_L22");
      else
        v *= th(plain, p.lattice) / th_g(plain - p.y, p.lattice, "geo_L22");
    }
    return Scaled(v);
  };
  const int sgn = inverse ? -1 : +1;
  auto form = [n, w, off, sgn](const SubsetIndex& K) {
    QuadraticFormSpec q = zero_form(n + 2);
    for (int i : K.members) {
      add_theta_factor(q, {{i - 1, -1}, {n, off}}, w, sgn);
      add_theta_factor(q, {{i - 1, -1}, {n, off - 1}}, w, -sgn);
    }
    return q;
  };
  return diagonal_generic(n, inverse ? -1 : +1, value, form);
}

DifferenceOperator l12_off(int n, cplx w, int off) {
  if (n < 1) throw std::invalid_argument("geo_L12: need n >= 1");
  DifferenceOperator op;
  op.n = n;
  op.mu = -2;
  op.nu = +1;
  for (int k = 1; k <= n; ++k) {
    for (const SubsetIndex& K : subsets_of_size(n, k - 1)) {
      const SubsetIndex Kbar = complement(K);
      const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
      for (int a : Kbar.members) {
        const std::uint32_t in_mask = subset_to_mask(K) | (1u << (a - 1));
        const SubsetIndex K_in = mask_to_subset(in_mask, n);
        auto fn = [n, k, w, off, a, K, Kbar, sgn](const EllipticParams& p) {
          const cplx we = w + static_cast<double>(off) * p.y;
          const cplx za = p.z[a - 1];
          cplx v = sgn * th(p.y, p.lattice);
          v *= th(p.lambda + we - za + static_cast<double>(n - 2 * k + 1) * p.y,
                  p.lattice);
          v /= th_g(we - za - p.y, p.lattice, "geo_L12");
          for (int j : K.members) {
            const cplx zj = p.z[j - 1];
            v *= th(we - zj, p.lattice);
            v /= th_g(we - zj - p.y, p.lattice, "geo_L12");
            v *= th(za - zj - p.y, p.lattice);
          }
          for (int j : Kbar.members)
            if (j != a) v /= th_g(za - p.z[j - 1], p.lattice, "geo_L12");
          return Scaled(v);
        };
        op.coefficients[{subset_to_mask(K), in_mask}] = fn;

        QuadraticFormSpec q = zero_form(n + 2);
        add_theta_factor(q, {{n, 1}}, cplx(0.0), +1);
        add_theta_factor(q, {{n + 1, 1}, {a - 1, -1}, {n, n - 2 * k + 1 + off}},
                         w, +1);
        add_theta_factor(q, {{a - 1, -1}, {n, off - 1}}, w, -1);
        for (int j : K.members) {
          add_theta_factor(q, {{j - 1, -1}, {n, off}}, w, +1);
          add_theta_factor(q, {{j - 1, -1}, {n, off - 1}}, w, -1);
          add_theta_factor(q, {{a - 1, 1}, {j - 1, -1}, {n, -1}}, cplx(0.0),
                           +1);
        }
        for (int j : Kbar.members)
          if (j != a)
            add_theta_factor(q, {{a - 1, 1}, {j - 1, -1}}, cplx(0.0), -1);
        op.entry_form[{subset_to_mask(K), in_mask}] = q;
        if (!op.bundle_form.count(k))
          op.bundle_form[k] = normalized_sector_form(q, K, K_in, op.nu);
      }
    }
  }
  return op;
}

DifferenceOperator l21_off(int n, cplx w, int off) {
  if (n < 1) throw std::invalid_argument("geo_L21: need n >= 1");
  DifferenceOperator op;
  op.n = n;
  op.mu = +2;
  op.nu = -1;
  for (int k = 0; k <= n - 1; ++k) {
    const double sgn = ((n - k) % 2 == 0) ? 1.0 : -1.0;
    for (const SubsetIndex& K : subsets_of_size(n, k + 1)) {
      const SubsetIndex Kbar = complement(K);
      for (int a : K.members) {
        const std::uint32_t in_mask = subset_to_mask(K) & ~(1u << (a - 1));
        const SubsetIndex K_in = mask_to_subset(in_mask, n);
        auto fn = [w, off, a, K, Kbar, sgn](const EllipticParams& p) {
          const cplx we = w + static_cast<double>(off) * p.y;
          const cplx za = p.z[a - 1];
          cplx v = sgn * th(p.y, p.lattice);
          v /= th_g(p.lambda, p.lattice, "geo_L21");
          v /= th_g(p.lambda - p.y, p.lattice, "geo_L21");
          v *= th(p.lambda - we + za, p.lattice);
          v /= th_g(we - za - p.y, p.lattice, "geo_L21");
          for (int j : K.members) {
            if (j == a) continue;
            const cplx zj = p.z[j - 1];
            v *= th(we - zj, p.lattice);
            v /= th_g(we - zj - p.y, p.lattice, "geo_L21");
            v /= th_g(zj - za, p.lattice, "geo_L21");
          }
          for (int j : Kbar.members)
            v *= th(p.z[j - 1] - za - p.y, p.lattice);
          return Scaled(v);
        };
        op.coefficients[{subset_to_mask(K), in_mask}] = fn;

        QuadraticFormSpec q = zero_form(n + 2);
        add_theta_factor(q, {{n, 1}}, cplx(0.0), +1);
        add_theta_factor(q, {{n + 1, 1}}, cplx(0.0), -1);
        add_theta_factor(q, {{n + 1, 1}, {n, -1}}, cplx(0.0), -1);
        add_theta_factor(q, {{n + 1, 1}, {a - 1, 1}, {n, -off}}, -w, +1);
        add_theta_factor(q, {{a - 1, -1}, {n, off - 1}}, w, -1);
        for (int j : K.members) {
          if (j == a) continue;
          add_theta_factor(q, {{j - 1, -1}, {n, off}}, w, +1);
          add_theta_factor(q, {{j - 1, -1}, {n, off - 1}}, w, -1);
          add_theta_factor(q, {{j - 1, 1}, {a - 1, -1}}, cplx(0.0), -1);
        }
        for (int j : Kbar.members)
          add_theta_factor(q, {{j - 1, 1}, {a - 1, -1}, {n, -1}}, cplx(0.0),
                           +1);
        op.entry_form[{subset_to_mask(K), in_mask}] = q;
        if (!op.bundle_form.count(k))
          op.bundle_form[k] = normalized_sector_form(q, K, K_in, op.nu);
      }
    }
  }
  return op;
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix side.
// ---------------------------------------------------------------------------

Matrix LOperatorMatrix::block(int i, int j, cplx w,
                              const EllipticParams& params) const {
  if (i < 1 || i > 2 || j < 1 || j > 2)
    throw std::invalid_argument("LOperatorMatrix::block: labels must be 1..2");
  const int dim = 1 << n;
  const Matrix m = full(w, params);
  return m.block((i - 1) * dim, (j - 1) * dim, dim, dim);
}

LOperatorMatrix vector_rep_L(cplx z) {
  LOperatorMatrix L;
  L.n = 1;
  L.full = [z](cplx w, const EllipticParams& p) {
    const cplx x = w - z;
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = 1.0;
    m(1, 1) = alpha_coeff(x, p.y, p.lambda, p.lattice);
    m(1, 2) = beta_coeff(x, p.y, p.lambda, p.lattice);
    m(2, 1) = beta_coeff(x, p.y, -p.lambda, p.lattice);
    m(2, 2) = alpha_coeff(x, p.y, -p.lambda, p.lattice);
    m(3, 3) = 1.0;
    return m;
  };
  return L;
}

LOperatorMatrix tensor_L(cplx w, const EllipticParams& params) {
  const int n = params.n();
  if (n < 1) throw std::invalid_argument("tensor_L: need at least one site");
  LOperatorMatrix L;
  L.n = n;
  L.full = [n](cplx w2, const EllipticParams& p) {
    if (p.n() != n)
      throw std::invalid_argument("tensor_L: evaluation site count changed");
    const int dim = 1 << (n + 1);
    Matrix m = Matrix::Identity(dim, dim);
    for (int a = 1; a <= n; ++a) {
      std::vector<int> shift;
      for (int s = a + 2; s <= n + 1; ++s) shift.push_back(s);
      const cplx za = p.z[a - 1];
      auto F = [w2, za, &p](cplx lam) {
        return r_matrix_gl2(w2 - za, p.y, lam, p.lattice);
      };
      m = m * embed_two_slot_gl2(n + 1, 1, a + 1, shift, p.y, p.lambda, F);
    }
    return m;
  };
  (void)L.full(w, params);  // validate pole proximity eagerly
  return L;
}

Matrix quantum_determinant_alg(cplx w, const EllipticParams& params) {
  const int n = params.n();
  const LOperatorMatrix L = tensor_L(w, params);
  const EllipticParams down = params.with_lambda_shift(-1);
  const Matrix m11 = L.block(1, 1, w + params.y, params);
  const Matrix m21 = L.block(2, 1, w + params.y, params);
  const Matrix m22 = L.block(2, 2, w, down);
  const Matrix m12 = L.block(1, 2, w, down);
  Matrix bracket = m11 * m22 - m21 * m12;
  const cplx num = th(params.lambda, params.lattice);
  for (int r = 0; r < (1 << n); ++r) {
    const double mu = gl2_total_weight(r, n);
    const cplx den = th_g(params.lambda - mu * params.y, params.lattice,
                          "quantum_determinant_alg");
    bracket.row(r) *= num / den;
  }
  return bracket;
}

double rll_algebraic_deviation(cplx w1, cplx w2,
                               const EllipticParams& params) {
  const int n = params.n();
  const int nslots = n + 2;
  auto embed = [&params, nslots](int p, int q, const std::vector<int>& shift,
                                 cplx zarg) {
    auto F = [zarg, &params](cplx lam) {
      return r_matrix_gl2(zarg, params.y, lam, params.lattice);
    };
    return embed_two_slot_gl2(nslots, p, q, shift, params.y, params.lambda, F);
  };

  std::vector<int> tail_all;
  for (int s = 3; s <= nslots; ++s) tail_all.push_back(s);
  Matrix lhs = embed(1, 2, tail_all, w1 - w2);
  for (int a = 1; a <= n; ++a) {
    std::vector<int> tail;
    for (int s = a + 3; s <= nslots; ++s) tail.push_back(s);
    lhs = lhs * embed(1, a + 2, tail, w1 - params.z[a - 1]);
  }
  for (int a = 1; a <= n; ++a) {
    std::vector<int> tail{1};
    for (int s = a + 3; s <= nslots; ++s) tail.push_back(s);
    lhs = lhs * embed(2, a + 2, tail, w2 - params.z[a - 1]);
  }

  Matrix rhs = Matrix::Identity(1 << nslots, 1 << nslots);
  for (int a = 1; a <= n; ++a) {
    std::vector<int> tail;
    for (int s = a + 3; s <= nslots; ++s) tail.push_back(s);
    rhs = rhs * embed(2, a + 2, tail, w2 - params.z[a - 1]);
  }
  for (int a = 1; a <= n; ++a) {
    std::vector<int> tail{2};
    for (int s = a + 3; s <= nslots; ++s) tail.push_back(s);
    rhs = rhs * embed(1, a + 2, tail, w1 - params.z[a - 1]);
  }
  rhs = rhs * embed(1, 2, {}, w1 - w2);

  const double scale = std::max(
      {lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff(), kTiny});
  return (lhs - rhs).cwiseAbs().maxCoeff() / scale;
}

double gz_commutator_deviation(cplx w1, cplx w2,
                               const EllipticParams& params) {
  const EllipticParams up = params.with_lambda_shift(1);
  const LOperatorMatrix L = tensor_L(w1, params);
  const Matrix d0 = quantum_determinant_alg(w1, params);
  const Matrix d1 = quantum_determinant_alg(w1, up);
  const Matrix a0 = L.block(2, 2, w2, params);
  const Matrix b0 = L.block(2, 2, w1, params);
  const Matrix a1 = L.block(2, 2, w2, up);
  const Matrix b1 = L.block(2, 2, w1, up);

  const Matrix c1 = d0 * a0 - a0 * d1;
  const Matrix c2 = b0 * a1 - a0 * b1;
  const double s1 = std::max((d0 * a0).cwiseAbs().maxCoeff(), kTiny);
  const double s2 = std::max((b0 * a1).cwiseAbs().maxCoeff(), kTiny);
  return std::max(c1.cwiseAbs().maxCoeff() / s1,
                  c2.cwiseAbs().maxCoeff() / s2);
}

// ---------------------------------------------------------------------------
// Gelfand-Zetlin eigenvectors.
// ---------------------------------------------------------------------------

Eigen::VectorXcd GZEigenvector::embedded() const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1 << I.n);
  for (std::size_t j = 0; j < index.size(); ++j)
    v(tensor_index_of_subset(index[j])) = coordinates(static_cast<int>(j));
  return v;
}

GZEigenvector gz_eigenvector(const SubsetIndex& I,
                             const EllipticParams& params) {
  const int n = params.n();
  if (I.n != n)
    throw std::invalid_argument("gz_eigenvector: subset size mismatch");
  GZEigenvector xi;
  xi.I = I;
  xi.index = subsets_of_size(n, I.k());
  cplx denom = 1.0;
  const SubsetIndex Ibar = complement(I);
  for (int a : I.members)
    for (int b : Ibar.members)
      denom *= th_g(params.z[a - 1] - params.z[b - 1] + params.y,
                    params.lattice, "gz_eigenvector");
  const std::vector<cplx> zI = z_at(params, I);
  xi.coordinates.resize(static_cast<int>(xi.index.size()));
  for (std::size_t j = 0; j < xi.index.size(); ++j)
    xi.coordinates(static_cast<int>(j)) =
        normalized_w(xi.index[j], -1, params, zI).v / denom;
  return xi;
}

double gz_l22_residual(const SubsetIndex& I, cplx w,
                       const EllipticParams& params) {
  const LOperatorMatrix L = tensor_L(w, params);
  const Matrix m22 = L.block(2, 2, w, params);
  const Eigen::VectorXcd u_up =
      gz_eigenvector(I, params.with_lambda_shift(1)).embedded();
  const Eigen::VectorXcd u = gz_eigenvector(I, params).embedded();
  cplx eig = 1.0;
  for (int a : I.members) {
    eig *= th(w - params.z[a - 1], params.lattice);
    eig /= th_g(w - params.z[a - 1] - params.y, params.lattice,
                "gz_l22_residual");
  }
  return (m22 * u_up - eig * u).norm() / u.norm();
}

double gz_delta_residual(const SubsetIndex& I, cplx w,
                         const EllipticParams& params) {
  const Matrix d = quantum_determinant_alg(w, params);
  const Eigen::VectorXcd u = gz_eigenvector(I, params).embedded();
  cplx eig = 1.0;
  for (int a = 1; a <= params.n(); ++a) {
    eig *= th(w - params.z[a - 1] + params.y, params.lattice);
    eig /= th_g(w - params.z[a - 1], params.lattice, "gz_delta_residual");
  }
  return (d * u - eig * u).norm() / u.norm();
}

// ---------------------------------------------------------------------------
// Difference-operator machinery.
// ---------------------------------------------------------------------------

QuadraticFormSpec restricted_twisting(const SubsetIndex& K) {
  const int n = K.n;
  const int k = K.k();
  Eigen::MatrixXi S = Eigen::MatrixXi::Zero(n + 2, n + 2);
  int row = 0;
  for (int a : K.members) S(row++, a - 1) = 1;
  for (int b : complement(K).members) S(row++, b - 1) = 1;
  S(n, n) = 1;
  S(n + 1, n + 1) = 1;
  return substitute_form(twisting_form(k, n), S, n + 2);
}

QuadraticFormSpec lambda_shift_form(const QuadraticFormSpec& q, int m) {
  if (q.p < 2)
    throw std::invalid_argument("lambda_shift_form: need the (y, lambda) tail");
  Eigen::MatrixXi S = Eigen::MatrixXi::Identity(q.p, q.p);
  S(q.p - 1, q.p - 2) = m;
  return substitute_form(q, S, q.p);
}

DifferenceOperator diagonal_operator(int n, const ValueFn& value,
                                     const FormFn& form) {
  return diagonal_generic(n, 0, value, form);
}

DifferenceOperator compose(const DifferenceOperator& a,
                           const DifferenceOperator& b) {
  if (a.n != b.n) throw std::invalid_argument("compose: size mismatch");
  DifferenceOperator c;
  c.n = a.n;
  c.mu = a.mu + b.mu;
  c.nu = a.nu + b.nu;

  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, EntryFn>>>
      a_by_in;
  for (const auto& entry : a.coefficients)
    a_by_in[entry.first.second].push_back({entry.first.first, entry.second});

  std::map<EntryKey, std::vector<std::pair<EntryFn, EntryFn>>> terms;
  for (const auto& entry : b.coefficients) {
    const auto it = a_by_in.find(entry.first.first);
    if (it == a_by_in.end()) continue;
    for (const auto& [out_mask, fa] : it->second)
      terms[{out_mask, entry.first.second}].push_back({fa, entry.second});
  }

  const int nu_a = a.nu;
  for (auto& [key, list] : terms) {
    c.coefficients[key] = [list = std::move(list),
                           nu_a](const EllipticParams& p) {
      const EllipticParams shifted = p.with_lambda_shift(nu_a);
      Scaled acc;
      for (const auto& [fa, fb] : list) acc += fa(p) * fb(shifted);
      return acc;
    };
  }

  for (const auto& [k, fb] : b.bundle_form) {
    const int k_mid = k + b.mu / 2;
    const auto ita = a.bundle_form.find(k_mid);
    if (ita == a.bundle_form.end()) continue;
    c.bundle_form[k] = add_forms(ita->second, lambda_shift_form(fb, a.nu));
  }
  return c;
}

DifferenceOperator add(const DifferenceOperator& a,
                       const DifferenceOperator& b) {
  if (a.n != b.n || a.mu != b.mu || a.nu != b.nu)
    throw std::invalid_argument("add: incompatible operators");
  DifferenceOperator c;
  c.n = a.n;
  c.mu = a.mu;
  c.nu = a.nu;
  c.coefficients = a.coefficients;
  for (const auto& [key, fb] : b.coefficients) {
    auto it = c.coefficients.find(key);
    if (it == c.coefficients.end()) {
      c.coefficients.emplace(key, fb);
      continue;
    }
    const EntryFn fa = it->second;
    const EntryFn fb_copy = fb;
    it->second = [fa, fb_copy](const EllipticParams& p) {
      Scaled s = fa(p);
      s += fb_copy(p);
      return s;
    };
  }

  const std::set<int> sa = sectors_with_entries(a);
  const std::set<int> sb = sectors_with_entries(b);
  std::set<int> sectors = sa;
  sectors.insert(sb.begin(), sb.end());
  for (int k : sectors) {
    const auto ita = a.bundle_form.find(k);
    const auto itb = b.bundle_form.find(k);
    const bool fa = ita != a.bundle_form.end();
    const bool fb = itb != b.bundle_form.end();
    if (sa.count(k) && sb.count(k)) {
      if (fa && fb && forms_equal(ita->second, itb->second, 1e-9))
        c.bundle_form[k] = ita->second;
    } else if (sa.count(k)) {
      if (fa) c.bundle_form[k] = ita->second;
    } else {
      if (fb) c.bundle_form[k] = itb->second;
    }
  }
  return c;
}

DifferenceOperator scale(const DifferenceOperator& a, cplx c) {
  DifferenceOperator out = a;
  for (auto& [key, fn] : out.coefficients) {
    const EntryFn inner = fn;
    fn = [inner, c](const EllipticParams& p) { return Scaled(c) * inner(p); };
  }
  return out;
}

ComponentSection apply(const DifferenceOperator& op,
                       const ComponentSection& s) {
  if (op.n != s.n) throw std::invalid_argument("apply: size mismatch");
  if (op.mu % 2 != 0) throw std::invalid_argument("apply: odd weight change");
  const int k_out = s.k + op.mu / 2;
  if (k_out < 0 || k_out > op.n)
    throw std::invalid_argument("apply: image sector out of range");

  std::map<std::uint32_t, int> pos;
  for (std::size_t j = 0; j < s.index.size(); ++j)
    pos[subset_to_mask(s.index[j])] = static_cast<int>(j);

  std::map<std::uint32_t, std::vector<std::pair<EntryFn, EntryFn>>> rows;
  for (const auto& [key, fn] : op.coefficients) {
    if (mask_popcount(key.second) != s.k) continue;
    const auto it = pos.find(key.second);
    if (it == pos.end())
      throw std::invalid_argument("apply: section index missing a component");
    rows[key.first].push_back({fn, s.values[static_cast<std::size_t>(it->second)]});
  }

  ComponentSection out;
  out.n = op.n;
  out.k = k_out;
  out.index = subsets_of_size(op.n, k_out);
  const int nu = op.nu;
  for (const SubsetIndex& K : out.index) {
    const auto it = rows.find(subset_to_mask(K));
    if (it == rows.end()) {
      out.values.emplace_back([](const EllipticParams&) { return Scaled(); });
      continue;
    }
    out.values.emplace_back(
        [list = it->second, nu](const EllipticParams& p) {
          const EllipticParams shifted = p.with_lambda_shift(nu);
          Scaled acc;
          for (const auto& [fn, val] : list) acc += fn(p) * val(shifted);
          return acc;
        });
  }

  const auto itf = op.bundle_form.find(s.k);
  if (itf != op.bundle_form.end() && s.base_form.p == op.n + 2)
    out.base_form =
        add_forms(itf->second, lambda_shift_form(s.base_form, op.nu));
  else
    out.base_form = zero_form(op.n + 2);
  return out;
}

ComponentSection combine_sections(
    const std::vector<std::pair<cplx, ComponentSection>>& terms) {
  if (terms.empty())
    throw std::invalid_argument("combine_sections: need at least one term");
  ComponentSection out;
  out.n = terms.front().second.n;
  out.k = terms.front().second.k;
  out.index = terms.front().second.index;
  for (const auto& [coeff, sec] : terms) {
    (void)coeff;
    if (sec.n != out.n || sec.k != out.k ||
        sec.index.size() != out.index.size())
      throw std::invalid_argument("combine_sections: sector mismatch");
  }
  for (std::size_t j = 0; j < out.index.size(); ++j) {
    std::vector<std::pair<cplx, std::function<Scaled(const EllipticParams&)>>>
        parts;
    for (const auto& [coeff, sec] : terms) parts.push_back({coeff, sec.values[j]});
    out.values.emplace_back([parts](const EllipticParams& p) {
      Scaled acc;
      for (const auto& [coeff, fn] : parts) acc += Scaled(coeff) * fn(p);
      return acc;
    });
  }
  out.base_form = zero_form(out.n + 2);
  return out;
}

// ---------------------------------------------------------------------------
// Geometric generators.
// ---------------------------------------------------------------------------

DifferenceOperator geo_Delta(int n, cplx w) { return delta_off(n, w, 0); }

DifferenceOperator geo_L22(int n, cplx w) { return l22_off(n, w, 0, false); }

DifferenceOperator geo_L22_inverse(int n, cplx w) {
  return l22_off(n, w, 0, true);
}

DifferenceOperator geo_L12(int n, cplx w) { return l12_off(n, w, 0); }

DifferenceOperator geo_L21(int n, cplx w) { return l21_off(n, w, 0); }

DifferenceOperator geo_L11(int n, cplx w) {
  auto p_value = [n](const SubsetIndex& K, const EllipticParams& p) {
    const cplx num =
        th(p.lambda + static_cast<double>(n - 2 * K.k()) * p.y, p.lattice);
    return Scaled(num / th_g(p.lambda, p.lattice, "geo_L11"));
  };
  auto p_form = [n](const SubsetIndex& K) {
    QuadraticFormSpec q = zero_form(n + 2);
    add_theta_factor(q, {{n + 1, 1}, {n, n - 2 * K.k()}}, cplx(0.0), +1);
    add_theta_factor(q, {{n + 1, 1}}, cplx(0.0), -1);
    return q;
  };
  const DifferenceOperator det_part =
      compose(diagonal_generic(n, 0, p_value, p_form), delta_off(n, w, -1));
  const DifferenceOperator ladder_part =
      compose(l21_off(n, w, 0), l12_off(n, w, -1));
  return compose(add(det_part, ladder_part), l22_off(n, w, -1, true));
}

DifferenceOperator geo_L(int i, int j, int n, cplx w) {
  if (i == 1 && j == 1) return geo_L11(n, w);
  if (i == 1 && j == 2) return geo_L12(n, w);
  if (i == 2 && j == 1) return geo_L21(n, w);
  if (i == 2 && j == 2) return geo_L22(n, w);
  throw std::invalid_argument("geo_L: labels must be 1..2");
}

std::pair<DifferenceOperator, DifferenceOperator> moment_maps(
    int n, const std::function<Scaled(const EllipticParams&)>& s,
    const QuadraticFormSpec* s_form) {
  auto right_value = [s](const SubsetIndex&, const EllipticParams& p) {
    return s(p);
  };
  auto left_value = [s, n](const SubsetIndex& K, const EllipticParams& p) {
    return s(p.with_lambda_shift(n - 2 * K.k()));
  };
  FormFn right_form = nullptr;
  FormFn left_form = nullptr;
  if (s_form) {
    const QuadraticFormSpec base = *s_form;
    right_form = [base](const SubsetIndex&) { return base; };
    left_form = [base, n](const SubsetIndex& K) {
      return lambda_shift_form(base, n - 2 * K.k());
    };
  }
  return {diagonal_generic(n, 0, left_value, left_form),
          diagonal_generic(n, 0, right_value, right_form)};
}

std::pair<DifferenceOperator, DifferenceOperator> theta_moment_maps(int n) {
  auto s = [](const EllipticParams& p) {
    return Scaled(th(p.lambda, p.lattice));
  };
  QuadraticFormSpec q = zero_form(n + 2);
  add_theta_factor(q, {{n + 1, 1}}, cplx(0.0), +1);
  return moment_maps(n, s, &q);
}

// ---------------------------------------------------------------------------
// Structure checks.
// ---------------------------------------------------------------------------

bool bundle_forms_consistent(const DifferenceOperator& op, double tol) {
  for (const auto& [key, raw] : op.entry_form) {
    const SubsetIndex K_out = mask_to_subset(key.first, op.n);
    const SubsetIndex K_in = mask_to_subset(key.second, op.n);
    const auto it = op.bundle_form.find(K_in.k());
    if (it == op.bundle_form.end()) return false;
    const QuadraticFormSpec f =
        normalized_sector_form(raw, K_out, K_in, op.nu);
    if (!forms_equal(f, it->second, tol)) return false;
  }
  return true;
}

double operator_multiplier_deviation(const DifferenceOperator& op, int n,
                                     const LatticeParams& lat, int trials,
                                     std::uint64_t seed) {
  double worst = 0.0;
  for (const auto& [key, fn] : op.coefficients) {
    const SubsetIndex K_out = mask_to_subset(key.first, op.n);
    const SubsetIndex K_in = mask_to_subset(key.second, op.n);
    const auto it = op.bundle_form.find(K_in.k());
    if (it == op.bundle_form.end()) continue;
    QuadraticFormSpec expect =
        add_forms(it->second, restricted_twisting(K_out));
    expect = add_forms(
        expect,
        negate_form(lambda_shift_form(restricted_twisting(K_in), op.nu)));
    auto f = [fn = fn, n, lat](const std::vector<cplx>& x) {
      EllipticParams p;
      p.lattice = lat;
      p.z.assign(x.begin(), x.begin() + n);
      p.y = x[static_cast<std::size_t>(n)];
      p.lambda = x[static_cast<std::size_t>(n) + 1];
      return fn(p);
    };
    const std::string label = "entry:" + std::to_string(key.first) + ":" +
                              std::to_string(key.second);
    worst = std::max(
        worst, multiplier_check(f, expect, lat, trials, derive_seed(seed, label)));
  }
  return worst;
}

double equivariance_deviation(const DifferenceOperator& op,
                              const EllipticParams& params, int a, int b) {
  const int n = op.n;
  if (a < 1 || b < 1 || a > n || b > n || a == b)
    throw std::invalid_argument("equivariance_deviation: bad transposition");
  EllipticParams swapped = params;
  std::swap(swapped.z[a - 1], swapped.z[b - 1]);
  auto transpose_mask = [a, b](std::uint32_t m) {
    const std::uint32_t bit_a = (m >> (a - 1)) & 1u;
    const std::uint32_t bit_b = (m >> (b - 1)) & 1u;
    m &= ~((1u << (a - 1)) | (1u << (b - 1)));
    if (bit_a) m |= 1u << (b - 1);
    if (bit_b) m |= 1u << (a - 1);
    return m;
  };
  double worst = 0.0;
  for (const auto& [key, fn] : op.coefficients) {
    const EntryKey skey{transpose_mask(key.first), transpose_mask(key.second)};
    const auto it = op.coefficients.find(skey);
    const Scaled base = fn(params);
    const Scaled other =
        (it != op.coefficients.end()) ? it->second(swapped) : Scaled();
    worst = std::max(worst, std::abs(base.v - other.v) /
                                std::max({base.mag, other.mag, kTiny}));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Single-component sections.
// ---------------------------------------------------------------------------

ComponentSection xi_hat_section(const SubsetIndex& I,
                                const EllipticParams& params) {
  const int n = params.n();
  if (I.n != n)
    throw std::invalid_argument("xi_hat_section: subset size mismatch");
  const SubsetIndex Ibar = complement(I);
  // validate the denominator eagerly at the construction point
  for (int a : I.members)
    for (int b : Ibar.members)
      th_g(params.z[a - 1] - params.z[b - 1] + params.y, params.lattice,
           "xi_hat_section");

  ComponentSection s;
  s.n = n;
  s.k = I.k();
  s.index = subsets_of_size(n, s.k);
  const std::vector<SubsetIndex> Js = s.index;
  for (const SubsetIndex& K : s.index) {
    s.values.emplace_back([I, K, Js](const EllipticParams& p) {
      const SubsetIndex Ibar2 = complement(I);
      cplx denom = 1.0;
      for (int a : I.members)
        for (int b : Ibar2.members)
          denom *= th_g(p.z[a - 1] - p.z[b - 1] + p.y, p.lattice,
                        "xi_hat_section");
      const std::vector<cplx> zI = z_at(p, I);
      const std::vector<cplx> zK = z_at(p, K);
      Scaled acc;
      for (const SubsetIndex& J : Js) {
        const Scaled cJ = normalized_w(J, -1, p, zI);
        const Scaled wJ = normalized_w(J, +1, p, zK);
        acc += scaled_div(cJ * wJ, denom);
      }
      return acc;
    });
  }
  QuadraticFormSpec q = zero_form(n + 2);
  for (int a : I.members)
    for (int b : Ibar.members)
      add_theta_factor(q, {{a - 1, 1}, {b - 1, -1}}, cplx(0.0), +1);
  s.base_form = add_forms(q, negate_form(restricted_twisting(I)));
  return s;
}

// ---------------------------------------------------------------------------
// Cross checks between the two realizations.
// ---------------------------------------------------------------------------

double e_action_deviation(int i, int j, cplx w, const EllipticParams& params) {
  const int n = params.n();
  const DifferenceOperator op = geo_L(i, j, n, w);
  const Matrix m = tensor_L(w, params).block(i, j, w, params);
  double worst = 0.0;
  for (int k = 0; k <= n; ++k) {
    const int k_out = k + op.mu / 2;
    if (k_out < 0 || k_out > n) continue;
    const std::vector<SubsetIndex> outs = subsets_of_size(n, k_out);
    for (const SubsetIndex& I : subsets_of_size(n, k)) {
      const ComponentSection img = apply(op, stab(I, params).section);
      const int col = tensor_index_of_subset(I);
      for (std::size_t pj = 0; pj < img.index.size(); ++pj) {
        const Scaled lhs = img.values[pj](params);
        const std::vector<cplx> zJ = z_at(params, img.index[pj]);
        Scaled rhs;
        for (const SubsetIndex& K : outs) {
          const cplx coeff = m(tensor_index_of_subset(K), col);
          rhs += Scaled(coeff) * normalized_w(K, +1, params, zJ);
        }
        worst = std::max(worst, std::abs(lhs.v - rhs.v) /
                                    std::max({lhs.mag, rhs.mag, kTiny}));
      }
    }
  }
  return worst;
}

namespace {

// R entry of the auxiliary-pair matrix at the fixed spectral difference,
// as a parameter function (row, col in the 4x4 two-slot basis).
EntryFn r_entry_fn(cplx dz, int row, int col) {
  return [dz, row, col](const EllipticParams& p) {
    return Scaled(r_matrix_gl2(dz, p.y, p.lambda, p.lattice)(row, col));
  };
}

bool r_entry_nonzero(int row, int col) {
  return row == col || (row == 1 && col == 2) || (row == 2 && col == 1);
}

std::vector<Scaled> eval_section(const ComponentSection& s,
                                 const EllipticParams& params) {
  std::vector<Scaled> out;
  out.reserve(s.values.size());
  for (const auto& fn : s.values) out.push_back(fn(params));
  return out;
}

}  // namespace

double rll_geometric_check(cplx w1, cplx w2, const EllipticParams& params,
                           const ComponentSection& s) {
  const int n = params.n();
  if (s.n != n)
    throw std::invalid_argument("rll_geometric_check: section size mismatch");
  const cplx dz = w1 - w2;
  double worst = 0.0;

  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) {
          const int k_out = s.k + (i + k) - (j + l);
          if (k_out < 0 || k_out > n) continue;

          bool lhs_any = false;
          bool rhs_any = false;
          DifferenceOperator lhs_op;
          DifferenceOperator rhs_op;

          for (int ip = 0; ip < 2; ++ip) {
            const int kp = i + k - ip;
            if (kp < 0 || kp > 1) continue;
            const int row = i * 2 + k;
            const int col = ip * 2 + kp;
            if (!r_entry_nonzero(row, col)) continue;
            const DifferenceOperator ml =
                moment_maps(n, r_entry_fn(dz, row, col)).first;
            DifferenceOperator term =
                compose(ml, compose(geo_L(ip + 1, j + 1, n, w1),
                                    geo_L(kp + 1, l + 1, n, w2)));
            if (term.coefficients.empty()) continue;
            lhs_op = lhs_any ? add(lhs_op, term) : std::move(term);
            lhs_any = true;
          }

          for (int jp = 0; jp < 2; ++jp) {
            const int lp = j + l - jp;
            if (lp < 0 || lp > 1) continue;
            const int row = jp * 2 + lp;
            const int col = j * 2 + l;
            if (!r_entry_nonzero(row, col)) continue;
            const DifferenceOperator mr =
                moment_maps(n, r_entry_fn(dz, row, col)).second;
            DifferenceOperator term =
                compose(compose(geo_L(k + 1, lp + 1, n, w2),
                                geo_L(i + 1, jp + 1, n, w1)),
                        mr);
            if (term.coefficients.empty()) continue;
            rhs_op = rhs_any ? add(rhs_op, term) : std::move(term);
            rhs_any = true;
          }

          if (!lhs_any && !rhs_any) continue;
          const std::size_t count = subsets_of_size(n, k_out).size();
          std::vector<Scaled> lv(count), rv(count);
          if (lhs_any) lv = eval_section(apply(lhs_op, s), params);
          if (rhs_any) rv = eval_section(apply(rhs_op, s), params);
          for (std::size_t p = 0; p < count; ++p)
            worst = std::max(worst,
                             std::abs(lv[p].v - rv[p].v) /
                                 std::max({lv[p].mag, rv[p].mag, kTiny}));
        }
  return worst;
}

double rll_corner_commutator_check(cplx w1, cplx w2,
                                   const EllipticParams& params,
                                   const ComponentSection& s) {
  const int n = params.n();
  const DifferenceOperator ab =
      compose(geo_L11(n, w1), geo_L11(n, w2));
  const DifferenceOperator ba =
      compose(geo_L11(n, w2), geo_L11(n, w1));
  const DifferenceOperator comm = add(ab, scale(ba, cplx(-1.0)));
  const ComponentSection img = apply(comm, s);
  double worst = 0.0;
  for (const auto& fn : img.values) {
    const Scaled v = fn(params);
    worst = std::max(worst, std::abs(v.v) / std::max(v.mag, kTiny));
  }
  return worst;
}

PoleCancellationReport pole_cancellation_report(cplx w, const SubsetIndex& I,
                                                const EllipticParams& params,
                                                int a, int b) {
  const int n = params.n();
  if (a < 1 || b < 1 || a > n || b > n || a == b)
    throw std::invalid_argument("pole_cancellation_report: bad point pair");
  PoleCancellationReport rep;
  const DifferenceOperator op = geo_L12(n, w);
  for (std::size_t t = 0; t < rep.deltas.size(); ++t) {
    EllipticParams p = params;
    p.z[b - 1] = p.z[a - 1] + cplx(rep.deltas[t]);
    const ComponentSection img = apply(op, stab(I, p).section);
    const std::vector<Scaled> vals = eval_section(img, p);
    double scale = 0.0;
    for (const Scaled& v : vals) scale = std::max(scale, std::abs(v.v));
    rep.image_scale[t] = scale;

    double gap = 0.0;
    for (std::size_t pj = 0; pj < img.index.size(); ++pj) {
      const SubsetIndex& K = img.index[pj];
      if (!K.contains(a) || K.contains(b)) continue;
      const std::uint32_t partner =
          (subset_to_mask(K) & ~(1u << (a - 1))) | (1u << (b - 1));
      for (std::size_t pk = 0; pk < img.index.size(); ++pk) {
        if (subset_to_mask(img.index[pk]) != partner) continue;
        gap = std::max(gap, std::abs(vals[pj].v - vals[pk].v) /
                                std::max(scale, kTiny));
      }
    }
    rep.gluing_gap[t] = gap;
  }
  return rep;
}

double l11_expansion_deviation(cplx w, const EllipticParams& params,
                               const ComponentSection& s) {
  const int n = params.n();
  if (s.n != n)
    throw std::invalid_argument("l11_expansion_deviation: size mismatch");
  const EllipticParams down = params.with_lambda_shift(-1);
  const PhiExpansion ex = phi_inverse(s, down);
  const Matrix m = tensor_L(w, params).block(1, 1, w, params);
  const ComponentSection img = apply(geo_L11(n, w), s);
  double worst = 0.0;
  for (std::size_t pj = 0; pj < img.index.size(); ++pj) {
    const Scaled lhs = img.values[pj](params);
    const std::vector<cplx> zL = z_at(params, img.index[pj]);
    Scaled rhs;
    for (std::size_t kk = 0; kk < ex.index.size(); ++kk) {
      const SubsetIndex& K = ex.index[kk];
      const cplx bK = ex.coeffs(static_cast<int>(kk)) *
                      psi_coeff(K, down.lambda, down.y, down.lattice);
      const int col = tensor_index_of_subset(K);
      for (const SubsetIndex& J : ex.index) {
        const cplx entry = m(tensor_index_of_subset(J), col);
        rhs += Scaled(bK * entry) * normalized_w(J, +1, params, zL);
      }
    }
    worst = std::max(worst, std::abs(lhs.v - rhs.v) /
                                std::max({lhs.mag, rhs.mag, kTiny}));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// The fixed-point evaluation operator.
// ---------------------------------------------------------------------------

Matrix ell_operator(cplx w, const EllipticParams& params) {
  const int n = params.n();
  const int half = 1 << n;
  Matrix ell = Matrix::Zero(2 * half, 2 * half);

  std::vector<cplx> zhat{w};
  zhat.insert(zhat.end(), params.z.begin(), params.z.end());

  for (int kf = 0; kf <= n + 1; ++kf) {
    // column basis of the target: (1, J) with |J| = kf-1, then (2, J) with
    // |J| = kf
    std::vector<std::pair<int, SubsetIndex>> basis;
    if (kf >= 1)
      for (const SubsetIndex& J : subsets_of_size(n, kf - 1))
        basis.push_back({1, J});
    if (kf <= n)
      for (const SubsetIndex& J : subsets_of_size(n, kf))
        basis.push_back({2, J});
    const int d = static_cast<int>(basis.size());
    if (d == 0) continue;

    std::vector<std::vector<cplx>> points;
    for (const SubsetIndex& A : subsets_of_size(n + 1, kf)) {
      std::vector<cplx> t;
      for (int mmb : A.members) t.push_back(zhat[static_cast<std::size_t>(mmb) - 1]);
      points.push_back(std::move(t));
    }
    if (static_cast<int>(points.size()) != d)
      throw std::logic_error("ell_operator: basis/point count mismatch");

    Matrix B(d, d);
    for (int c = 0; c < d; ++c) {
      const int jlab = basis[static_cast<std::size_t>(c)].first;
      const SubsetIndex& J = basis[static_cast<std::size_t>(c)].second;
      const int kj = (jlab == 1) ? 1 : 0;
      const cplx lam_left =
          params.lambda + static_cast<double>(n - 2 * J.k()) * params.y;
      const ThetaSymFn f =
          (kj == 1)
              ? omega_elementary(1, +1, w, lam_left, params.y, params.lattice)
              : unit_fn(+1, {w}, lam_left, params.y, params.lattice);
      const ThetaSymFn g = omega_weight(J, +1, params);
      for (int r = 0; r < d; ++r)
        B(r, c) = shuffle_eval(f, g, +1, {w}, params.z, params.y,
                               params.lattice, points[static_cast<std::size_t>(r)])
                      .v;
    }
    const Eigen::FullPivLU<Matrix> lu(B);
    if (!lu.isInvertible())
      throw sampling_error("ell_operator: singular evaluation system");

    for (int i = 1; i <= 2; ++i) {
      const int ki = (i == 1) ? 1 : 0;
      const int size_I = kf - ki;
      if (size_I < 0 || size_I > n) continue;
      const int mu_i = (i == 1) ? 1 : -1;
      const ThetaSymFn gel =
          (ki == 1) ? omega_elementary(1, +1, w, params.lambda, params.y,
                                       params.lattice)
                    : unit_fn(+1, {w}, params.lambda, params.y, params.lattice);
      for (const SubsetIndex& I : subsets_of_size(n, size_I)) {
        const ThetaSymFn fI =
            omega_weight(I, +1, params.with_lambda_shift(-mu_i));
        Eigen::VectorXcd F(d);
        for (int r = 0; r < d; ++r)
          F(r) = shuffle_eval(fI, gel, +1, params.z, {w}, params.y,
                              params.lattice, points[static_cast<std::size_t>(r)])
                     .v;
        const Eigen::VectorXcd x = lu.solve(F);
        const int col = (i - 1) * half + tensor_index_of_subset(I);
        for (int c = 0; c < d; ++c) {
          const int jlab = basis[static_cast<std::size_t>(c)].first;
          const SubsetIndex& J = basis[static_cast<std::size_t>(c)].second;
          ell((jlab - 1) * half + tensor_index_of_subset(J), col) = x(c);
        }
      }
    }
  }
  return ell;
}

Matrix ell_gauged(cplx w, const EllipticParams& params) {
  const int n = params.n();
  const int half = 1 << n;
  const cplx lam = params.lambda;
  const cplx y = params.y;
  Matrix g = ell_operator(w, params);
  auto psi_aux = [&params](int label, cplx at) {
    if (label == 2) return cplx(1.0);
    return th(at, params.lattice) * th(at - params.y, params.lattice);
  };
  for (int jlab = 1; jlab <= 2; ++jlab)
    for (int kj = 0; kj <= n; ++kj)
      for (const SubsetIndex& J : subsets_of_size(n, kj)) {
        const int row = (jlab - 1) * half + tensor_index_of_subset(J);
        const cplx wt = static_cast<double>(2 * kj - n);
        const cplx fac = psi_aux(jlab, lam - wt * y) *
                         psi_coeff(J, lam, y, params.lattice);
        g.row(row) *= fac;
      }
  for (int ilab = 1; ilab <= 2; ++ilab)
    for (int ki = 0; ki <= n; ++ki)
      for (const SubsetIndex& I : subsets_of_size(n, ki)) {
        const int col = (ilab - 1) * half + tensor_index_of_subset(I);
        const double mu_i = (ilab == 1) ? 1.0 : -1.0;
        const cplx fac = psi_aux(ilab, lam) *
                         psi_coeff(I, lam - mu_i * y, y, params.lattice);
        if (std::abs(fac) < kGuard)
          throw pole_error("ell_gauged: normalization factor near zero");
        g.col(col) /= fac;
      }
  return g;
}

double ell_vs_tensor_check(cplx w, const EllipticParams& params) {
  const Matrix a = ell_gauged(w, params);
  const Matrix b = tensor_L(w, params).full(w, params);
  const double scale =
      std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), kTiny});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

double ell_ybe_check(cplx w1, cplx w2, const EllipticParams& params) {
  const int n = params.n();
  const int half = 1 << n;
  const int dim = 4 * half;

  auto e13 = [&](cplx w, bool shift_by_slot2) {
    Matrix m = Matrix::Zero(dim, dim);
    for (int b = 0; b < 2; ++b) {
      const int sh = shift_by_slot2 ? (b == 0 ? -1 : +1) : 0;
      const Matrix x = ell_operator(w, params.with_lambda_shift(sh));
      for (int a = 0; a < 2; ++a)
        for (int ap = 0; ap < 2; ++ap)
          for (int mm = 0; mm < half; ++mm)
            for (int mp = 0; mp < half; ++mp)
              m((a * 2 + b) * half + mm, (ap * 2 + b) * half + mp) =
                  x(a * half + mm, ap * half + mp);
    }
    return m;
  };
  auto e23 = [&](cplx w, bool shift_by_slot1) {
    Matrix m = Matrix::Zero(dim, dim);
    for (int a = 0; a < 2; ++a) {
      const int sh = shift_by_slot1 ? (a == 0 ? -1 : +1) : 0;
      const Matrix x = ell_operator(w, params.with_lambda_shift(sh));
      for (int b = 0; b < 2; ++b)
        for (int bp = 0; bp < 2; ++bp)
          for (int mm = 0; mm < half; ++mm)
            for (int mp = 0; mp < half; ++mp)
              m((a * 2 + b) * half + mm, (a * 2 + bp) * half + mp) =
                  x(b * half + mm, bp * half + mp);
    }
    return m;
  };

  // The two R-factors straddle the evaluation chain: the left one acts where
  // the lattice sector is already updated, so its argument carries the sector
  // weight; the right one acts on the incoming sector and sees the bare
  // parameter.
  auto r12 = [&](bool weight_shifted) {
    Matrix m = Matrix::Zero(dim, dim);
    for (int mm = 0; mm < half; ++mm) {
      const double wt = weight_shifted ? gl2_total_weight(mm, n) : 0.0;
      const Matrix r = r_plus_gl2(
          w1 - w2, params.y, params.lambda - wt * params.y, params.lattice);
      for (int row = 0; row < 4; ++row)
        for (int col = 0; col < 4; ++col)
          m(row * half + mm, col * half + mm) = r(row, col);
    }
    return m;
  };

  const Matrix lhs = r12(true) * e13(w1, false) * e23(w2, true);
  const Matrix rhs = e23(w2, false) * e13(w1, true) * r12(false);
  const double scale =
      std::max({lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff(), kTiny});
  return (lhs - rhs).cwiseAbs().maxCoeff() / scale;
}

}  // namespace ellqg
