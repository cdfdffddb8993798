#include "ellqg/rmatrix.hpp"

#include <map>
#include <stdexcept>

namespace ellqg {

namespace {

cplx guarded_theta(cplx arg, const LatticeParams& lat, double guard,
                   const char* what) {
  const cplx v = theta(arg, lat);
  if (std::abs(v) < guard)
    throw pole_error(std::string("theta factor too close to zero in ") + what);
  return v;
}

int pow_int(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

cplx alpha_coeff(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                 double guard) {
  const cplx d1 = guarded_theta(z - y, lat, guard, "alpha");
  const cplx d2 = guarded_theta(lambda, lat, guard, "alpha");
  return theta(z, lat) * theta(lambda + y, lat) / (d1 * d2);
}

cplx beta_coeff(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                double guard) {
  const cplx d1 = guarded_theta(z - y, lat, guard, "beta");
  const cplx d2 = guarded_theta(lambda, lat, guard, "beta");
  return -theta(z + lambda, lat) * theta(y, lat) / (d1 * d2);
}

namespace {

// Shared 4x4 layout of all three gl_2 matrices; zs is the spectral argument
// fed to alpha/beta (z or -z), sign selects where -lambda goes.
Matrix gl2_from_coeffs(cplx za, cplx y, cplx lambda, const LatticeParams& lat,
                       double guard, bool minus_lambda_on_top) {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(3, 3) = 1.0;
  const cplx ap = alpha_coeff(za, y, lambda, lat, guard);
  const cplx am = alpha_coeff(za, y, -lambda, lat, guard);
  const cplx bp = beta_coeff(za, y, lambda, lat, guard);
  const cplx bm = beta_coeff(za, y, -lambda, lat, guard);
  if (minus_lambda_on_top) {
    m(1, 1) = am;
    m(2, 2) = ap;
  } else {
    m(1, 1) = ap;
    m(2, 2) = am;
  }
  m(1, 2) = bp;
  m(2, 1) = bm;
  return m;
}

}  // namespace

Matrix r_matrix_gl2(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                    double guard) {
  return gl2_from_coeffs(z, y, lambda, lat, guard, false);
}

Matrix r_minus_gl2(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                   double guard) {
  return gl2_from_coeffs(-z, y, lambda, lat, guard, true);
}

Matrix r_plus_gl2(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                  double guard) {
  return gl2_from_coeffs(z, y, lambda, lat, guard, true);
}

Matrix r_matrix_glN(cplx z, cplx y, const std::vector<cplx>& lambda,
                    const LatticeParams& lat, double guard) {
  const int N = static_cast<int>(lambda.size());
  if (N < 1 || N > 4) throw std::invalid_argument("r_matrix_glN: need 1<=N<=4");
  Matrix m = Matrix::Zero(N * N, N * N);
  auto at = [N](int i, int j) { return (i - 1) * N + (j - 1); };
  for (int i = 1; i <= N; ++i) m(at(i, i), at(i, i)) = 1.0;
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) {
      if (i == j) continue;
      const cplx lij = lambda[static_cast<std::size_t>(i - 1)] -
                       lambda[static_cast<std::size_t>(j - 1)];
      m(at(i, j), at(i, j)) = alpha_coeff(z, y, lij, lat, guard);
      m(at(i, j), at(j, i)) = beta_coeff(z, y, lij, lat, guard);
    }
  return m;
}

DynamicalRMatrix standard_r(int N, const LatticeParams& lat, double guard) {
  DynamicalRMatrix R;
  R.N = N;
  R.eval = [N, lat, guard](cplx z, cplx y, const std::vector<cplx>& lambda) {
    if (static_cast<int>(lambda.size()) != N)
      throw std::invalid_argument("standard_r: lambda length mismatch");
    return r_matrix_glN(z, y, lambda, lat, guard);
  };
  return R;
}

DynamicalRMatrix wrap_scalar_gl2(std::function<Matrix(cplx, cplx, cplx)> f) {
  DynamicalRMatrix R;
  R.N = 2;
  R.eval = [f = std::move(f)](cplx z, cplx y,
                              const std::vector<cplx>& lambda) {
    if (lambda.size() != 2)
      throw std::invalid_argument("wrap_scalar_gl2: lambda length mismatch");
    return f(z, y, lambda[0] - lambda[1]);
  };
  return R;
}

DynamicalRMatrix dual_r(const DynamicalRMatrix& R) {
  DynamicalRMatrix D;
  D.N = R.N;
  D.eval = [e = R.eval](cplx z, cplx y, const std::vector<cplx>& lambda) {
    const Matrix m = e(z, y, lambda);
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible())
      throw std::invalid_argument("dual_r: matrix is singular");
    return Matrix(lu.inverse().transpose());
  };
  return D;
}

DynamicalRMatrix gauge_r(
    const DynamicalRMatrix& R,
    std::function<Matrix(cplx, const std::vector<cplx>&)> psi) {
  DynamicalRMatrix G;
  G.N = R.N;
  const int N = R.N;
  G.eval = [e = R.eval, psi = std::move(psi), N](
               cplx z, cplx y, const std::vector<cplx>& lambda) {
    // psi2 = psi(l - y h^{(2)})^{(1)} psi(l)^{(2)}, diagonal since psi
    // preserves the one-dimensional weight spaces.
    Matrix psi2 = Matrix::Zero(N * N, N * N);
    Matrix psi2_flip = Matrix::Zero(N * N, N * N);
    const Matrix p0 = psi(y, lambda);
    std::vector<Matrix> p_shift(static_cast<std::size_t>(N));
    for (int b = 1; b <= N; ++b) {
      std::vector<cplx> ls = lambda;
      ls[static_cast<std::size_t>(b - 1)] -= y;
      p_shift[static_cast<std::size_t>(b - 1)] = psi(y, ls);
    }
    for (int a = 1; a <= N; ++a)
      for (int b = 1; b <= N; ++b) {
        const int idx = (a - 1) * N + (b - 1);
        psi2(idx, idx) = p_shift[static_cast<std::size_t>(b - 1)](a - 1, a - 1) *
                         p0(b - 1, b - 1);
        // (21): role of the slots swapped
        psi2_flip(idx, idx) =
            p_shift[static_cast<std::size_t>(a - 1)](b - 1, b - 1) *
            p0(a - 1, a - 1);
      }
    const Matrix m = e(z, y, lambda);
    return Matrix(psi2.inverse() * m * psi2_flip);
  };
  return G;
}

int tensor_digit(int index, int slot, int n, int N) {
  if (slot < 1 || slot > n) throw std::out_of_range("tensor_digit: slot");
  const int shift = pow_int(N, n - slot);
  return (index / shift) % N + 1;
}

int gl2_weight(int index, int slot, int n) {
  return tensor_digit(index, slot, n, 2) == 1 ? 1 : -1;
}

int gl2_total_weight(int index, int n) {
  int w = 0;
  for (int s = 1; s <= n; ++s) w += gl2_weight(index, s, n);
  return w;
}

int tensor_index_of_subset(const SubsetIndex& K) {
  int idx = 0;
  for (int a = 1; a <= K.n; ++a) idx = 2 * idx + (K.contains(a) ? 0 : 1);
  return idx;
}

SubsetIndex subset_of_tensor_index(int index, int n) {
  std::vector<int> mem;
  for (int a = 1; a <= n; ++a)
    if (tensor_digit(index, a, n, 2) == 1) mem.push_back(a);
  return SubsetIndex(n, std::move(mem));
}

Matrix embed_two_slot(int N, int nslots, int p, int q,
                      const std::vector<int>& shift_slots, cplx y,
                      const std::vector<cplx>& lambda,
                      const std::function<Matrix(const std::vector<cplx>&)>& F) {
  if (p == q || p < 1 || q < 1 || p > nslots || q > nslots)
    throw std::invalid_argument("embed_two_slot: bad slot pair");
  const int D = pow_int(N, nslots);
  Matrix out = Matrix::Zero(D, D);

  // Cache F per tuple of digits in the shift slots; everything else about
  // the column only determines where the 2-slot block lands.
  std::map<std::vector<int>, Matrix> cache;
  for (int c = 0; c < D; ++c) {
    std::vector<int> key;
    key.reserve(shift_slots.size());
    for (int s : shift_slots) key.push_back(tensor_digit(c, s, nslots, N));
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<cplx> ls = lambda;
      for (int d : key) ls[static_cast<std::size_t>(d - 1)] -= y;
      it = cache.emplace(key, F(ls)).first;
    }
    const Matrix& Fm = it->second;

    const int ap = tensor_digit(c, p, nslots, N);
    const int aq = tensor_digit(c, q, nslots, N);
    const int col2 = (ap - 1) * N + (aq - 1);
    const int stride_p = pow_int(N, nslots - p);
    const int stride_q = pow_int(N, nslots - q);
    const int base = c - (ap - 1) * stride_p - (aq - 1) * stride_q;
    for (int bp = 1; bp <= N; ++bp)
      for (int bq = 1; bq <= N; ++bq) {
        const cplx v = Fm((bp - 1) * N + (bq - 1), col2);
        if (v == cplx{0.0, 0.0}) continue;
        out(base + (bp - 1) * stride_p + (bq - 1) * stride_q, c) = v;
      }
  }
  return out;
}

Matrix embed_two_slot_gl2(int n, int p, int q,
                          const std::vector<int>& shift_slots, cplx y,
                          cplx lambda, const std::function<Matrix(cplx)>& F) {
  if (p == q || p < 1 || q < 1 || p > n || q > n)
    throw std::invalid_argument("embed_two_slot_gl2: bad slot pair");
  const int D = pow_int(2, n);
  Matrix out = Matrix::Zero(D, D);
  std::map<int, Matrix> cache;  // keyed by total weight of shift slots
  for (int c = 0; c < D; ++c) {
    int wsum = 0;
    for (int s : shift_slots) wsum += gl2_weight(c, s, n);
    auto it = cache.find(wsum);
    if (it == cache.end())
      it = cache.emplace(wsum, F(lambda - y * static_cast<double>(wsum))).first;
    const Matrix& Fm = it->second;

    const int ap = tensor_digit(c, p, n, 2);
    const int aq = tensor_digit(c, q, n, 2);
    const int col2 = (ap - 1) * 2 + (aq - 1);
    const int stride_p = pow_int(2, n - p);
    const int stride_q = pow_int(2, n - q);
    const int base = c - (ap - 1) * stride_p - (aq - 1) * stride_q;
    for (int bp = 1; bp <= 2; ++bp)
      for (int bq = 1; bq <= 2; ++bq) {
        const cplx v = Fm((bp - 1) * 2 + (bq - 1), col2);
        if (v == cplx{0.0, 0.0}) continue;
        out(base + (bp - 1) * stride_p + (bq - 1) * stride_q, c) = v;
      }
  }
  return out;
}

Matrix flip_gl2() {
  Matrix p = Matrix::Zero(4, 4);
  p(0, 0) = p(3, 3) = 1.0;
  p(1, 2) = p(2, 1) = 1.0;
  return p;
}

Matrix s_operator(int i, const EllipticParams& params, double guard) {
  const int n = params.n();
  if (i < 1 || i >= n) throw std::out_of_range("s_operator: need 1 <= i <= n-1");
  const cplx dz = params.z[static_cast<std::size_t>(i - 1)] -
                  params.z[static_cast<std::size_t>(i)];
  std::vector<int> trailing;
  for (int j = i + 2; j <= n; ++j) trailing.push_back(j);
  const Matrix p = flip_gl2();
  auto F = [&](cplx l) {
    return Matrix(r_matrix_gl2(dz, params.y, l, params.lattice, guard) * p);
  };
  return embed_two_slot_gl2(n, i, i + 1, trailing, params.y, params.lambda, F);
}

double check_dybe(const DynamicalRMatrix& R, cplx z, cplx w, cplx y,
                  const std::vector<cplx>& lambda) {
  const int N = R.N;
  auto F = [&](cplx zarg) {
    return [&, zarg](const std::vector<cplx>& l) { return R.eval(zarg, y, l); };
  };
  auto factor = [&](cplx zarg, int p, int q, std::vector<int> shifts) {
    return embed_two_slot(N, 3, p, q, shifts, y, lambda, F(zarg));
  };
  const Matrix lhs = factor(z, 1, 2, {3}) * factor(z + w, 1, 3, {}) *
                     factor(w, 2, 3, {1});
  const Matrix rhs = factor(w, 2, 3, {}) * factor(z + w, 1, 3, {2}) *
                     factor(z, 1, 2, {});
  const double scale =
      std::max(lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff());
  return (lhs - rhs).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

double check_inversion(const DynamicalRMatrix& R, cplx z, cplx y,
                       const std::vector<cplx>& lambda) {
  const int N = R.N;
  auto F = [&](cplx zarg) {
    return [&, zarg](const std::vector<cplx>& l) { return R.eval(zarg, y, l); };
  };
  const Matrix prod = embed_two_slot(N, 2, 1, 2, {}, y, lambda, F(z)) *
                      embed_two_slot(N, 2, 2, 1, {}, y, lambda, F(-z));
  const double scale = std::max(prod.cwiseAbs().maxCoeff(), 1.0);
  return (prod - Matrix::Identity(N * N, N * N)).cwiseAbs().maxCoeff() / scale;
}

double weight_block_leakage(const Matrix& m, int N, int nslots) {
  // Total weight of a basis index = multiset of digits appearing in it.
  auto digit_counts = [&](int idx) {
    std::vector<int> cnt(static_cast<std::size_t>(N), 0);
    for (int s = 1; s <= nslots; ++s)
      ++cnt[static_cast<std::size_t>(tensor_digit(idx, s, nslots, N) - 1)];
    return cnt;
  };
  std::vector<std::vector<int>> w(static_cast<std::size_t>(m.rows()));
  for (int r = 0; r < m.rows(); ++r)
    w[static_cast<std::size_t>(r)] = digit_counts(r);
  double worst = 0.0;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c)
      if (w[static_cast<std::size_t>(r)] != w[static_cast<std::size_t>(c)])
        worst = std::max(worst, std::abs(m(r, c)));
  return worst;
}

}  // namespace ellqg
