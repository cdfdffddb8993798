// Unit tests for the dynamical R-matrix module: coefficient functions,
// Yang-Baxter / inversion deviations, exchange operators, dual and gauge.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ellqg/rmatrix.hpp"

using namespace ellqg;

namespace {

LatticeParams lat() {
  LatticeParams l;
  l.tau = cplx{0.13, 0.87};
  return l;
}

std::vector<cplx> sample_lambda_vec(int N, Rng& rng, double spread = 0.4) {
  std::vector<cplx> l(static_cast<std::size_t>(N));
  for (auto& v : l) v = rng.box(-spread, spread, -0.2, 0.2);
  return l;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("coefficients at y = 0 and against raw theta evaluation") {
  const LatticeParams l = lat();
  const cplx z{0.31, 0.05}, lam{0.47, -0.11};
  CHECK(std::abs(alpha_coeff(z, 0.0, lam, l) - 1.0) < 1e-13);
  CHECK(std::abs(beta_coeff(z, 0.0, lam, l)) < 1e-13);

  const cplx y{0.12, 0.03};
  const cplx a = theta(z, l) * theta(lam + y, l) /
                 (theta(z - y, l) * theta(lam, l));
  const cplx b = -theta(z + lam, l) * theta(y, l) /
                 (theta(z - y, l) * theta(lam, l));
  CHECK(std::abs(alpha_coeff(z, y, lam, l) - a) < 1e-13 * std::abs(a));
  CHECK(std::abs(beta_coeff(z, y, lam, l) - b) < 1e-13 * std::abs(b));
}

TEST_CASE("pole guard trips on theta zeros in denominators") {
  const LatticeParams l = lat();
  CHECK_THROWS_AS(alpha_coeff(cplx{0.2, 0.0}, cplx{0.2, 0.0}, cplx{0.4, 0.1}, l),
                  pole_error);
  CHECK_THROWS_AS(beta_coeff(cplx{0.3, 0.1}, cplx{0.1, 0.0}, cplx{0.0, 0.0}, l),
                  pole_error);
}

TEST_CASE("gl2 matrix shape and degenerations") {
  const LatticeParams l = lat();
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    const cplx z = rng.box(-0.4, 0.4, -0.2, 0.2);
    const cplx lam = rng.box(-0.4, 0.4, -0.2, 0.2);
    const Matrix id = r_matrix_gl2(z, 0.0, lam, l);
    CHECK(max_abs(id - Matrix::Identity(4, 4)) < 1e-12);

    const cplx y = rng.box(-0.15, 0.15, -0.05, 0.05);
    const Matrix r = r_matrix_gl2(z, y, lam, l);
    CHECK(r(0, 0) == cplx{1.0, 0.0});
    CHECK(r(3, 3) == cplx{1.0, 0.0});
    CHECK(weight_block_leakage(r, 2, 2) == 0.0);

    // inversion by direct 4x4 multiplication, (21) = conjugate by the flip
    const Matrix p = flip_gl2();
    const Matrix prod = r * p * r_matrix_gl2(-z, y, lam, l) * p;
    CHECK(max_abs(prod - Matrix::Identity(4, 4)) < 1e-10 * std::max(1.0, max_abs(prod)));
  }
}

TEST_CASE("glN reduces to gl2 and degenerates at y = 0") {
  const LatticeParams l = lat();
  Rng rng(5);
  const cplx z = rng.box(-0.4, 0.4, -0.2, 0.2);
  const cplx y = rng.box(-0.15, 0.15, -0.05, 0.05);
  const auto lam2 = sample_lambda_vec(2, rng);
  CHECK(max_abs(r_matrix_glN(z, y, lam2, l) -
                r_matrix_gl2(z, y, lam2[0] - lam2[1], l)) < 1e-14);

  const auto lam3 = sample_lambda_vec(3, rng);
  CHECK(max_abs(r_matrix_glN(z, 0.0, lam3, l) - Matrix::Identity(9, 9)) < 1e-12);
  CHECK(weight_block_leakage(r_matrix_glN(z, y, lam3, l), 3, 2) == 0.0);
  CHECK_THROWS_AS(r_matrix_glN(z, y, sample_lambda_vec(5, rng), l),
                  std::invalid_argument);
}

TEST_CASE("inversion relation, gl2 and gl3, 50 seeded points each") {
  const LatticeParams l = lat();
  for (int N : {2, 3}) {
    const DynamicalRMatrix R = standard_r(N, l);
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(derive_seed(1000 + static_cast<std::uint64_t>(N), std::to_string(trial)));
      const cplx z = rng.box(-0.4, 0.4, -0.2, 0.2);
      const cplx y = rng.box(-0.15, 0.15, -0.05, 0.05);
      CHECK(check_inversion(R, z, y, sample_lambda_vec(N, rng)) < 1e-10);
    }
  }
}

TEST_CASE("dynamical Yang-Baxter equation, gl2 and gl3") {
  const LatticeParams l = lat();
  for (int N : {2, 3}) {
    const DynamicalRMatrix R = standard_r(N, l);
    const int trials = N == 2 ? 50 : 6;
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng(derive_seed(77 + static_cast<std::uint64_t>(N), std::to_string(trial)));
      const cplx z = rng.box(-0.4, 0.4, -0.2, 0.2);
      const cplx w = rng.box(-0.4, 0.4, -0.2, 0.2);
      const cplx y = rng.box(-0.15, 0.15, -0.05, 0.05);
      CHECK(check_dybe(R, z, w, y, sample_lambda_vec(N, rng)) < 1e-9);
      if (trial == 0)
        CHECK(check_dybe(R, z, w, 0.0, sample_lambda_vec(N, rng)) < 1e-13);
    }
  }
}

TEST_CASE("exchange operators: explicit n=2 form, weight grading, braid") {
  EllipticParams p = sample_generic_params(2, 314);
  const Matrix s1 = s_operator(1, p);
  const Matrix direct =
      r_matrix_gl2(p.z[0] - p.z[1], p.y, p.lambda, p.lattice) * flip_gl2();
  CHECK(max_abs(s1 - direct) == 0.0);
  CHECK(weight_block_leakage(s1, 2, 2) == 0.0);

  EllipticParams q = sample_generic_params(3, 2718);
  auto swapped = [&](const EllipticParams& base, int i) {
    EllipticParams out = base;
    std::swap(out.z[static_cast<std::size_t>(i - 1)],
              out.z[static_cast<std::size_t>(i)]);
    return out;
  };
  // s1 s2 s1 = s2 s1 s2 acting on vector-valued functions of z
  const EllipticParams q_s1 = swapped(q, 1), q_s2 = swapped(q, 2);
  const EllipticParams q_s2s1 = swapped(q_s1, 2), q_s1s2 = swapped(q_s2, 1);
  const Matrix lhs =
      s_operator(1, q) * s_operator(2, q_s1) * s_operator(1, q_s2s1);
  const Matrix rhs =
      s_operator(2, q) * s_operator(1, q_s2) * s_operator(2, q_s1s2);
  CHECK(max_abs(lhs - rhs) < 1e-9 * std::max(max_abs(lhs), max_abs(rhs)));
  CHECK(weight_block_leakage(lhs, 2, 3) == 0.0);

  // inversion within the S_n representation
  const Matrix round_trip = s_operator(2, q) * s_operator(2, q_s2);
  CHECK(max_abs(round_trip - Matrix::Identity(8, 8)) < 1e-10);

  CHECK_THROWS_AS(s_operator(3, q), std::out_of_range);
}

TEST_CASE("dual of the gl2 R-matrix matches its displayed closed form") {
  const LatticeParams l = lat();
  const DynamicalRMatrix D =
      dual_r(wrap_scalar_gl2([l](cplx z, cplx y, cplx lam) {
        return r_matrix_gl2(z, y, lam, l);
      }));
  Rng rng(99);
  for (int i = 0; i < 10; ++i) {
    const cplx z = rng.box(-0.4, 0.4, -0.2, 0.2);
    const cplx y = rng.box(-0.15, 0.15, -0.05, 0.05);
    const cplx lam = rng.box(-0.4, 0.4, -0.2, 0.2);
    const Matrix lhs = D.eval(z, y, {lam, 0.0});
    const Matrix rhs = r_minus_gl2(z, y, lam, l);
    CHECK(max_abs(lhs - rhs) < 1e-10 * std::max(1.0, max_abs(rhs)));
  }
}

TEST_CASE("gauge of the gl2 R-matrix matches its displayed closed form") {
  const LatticeParams l = lat();
  const DynamicalRMatrix base = wrap_scalar_gl2(
      [l](cplx z, cplx y, cplx lam) { return r_matrix_gl2(z, y, lam, l); });
  auto psi = [l](cplx y, const std::vector<cplx>& lv) {
    const cplx lam = lv[0] - lv[1];
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = theta(lam, l) * theta(lam - y, l);
    m(1, 1) = 1.0;
    return m;
  };
  const DynamicalRMatrix G = gauge_r(base, psi);
  Rng rng(123);
  for (int i = 0; i < 10; ++i) {
    const cplx z = rng.box(-0.4, 0.4, -0.2, 0.2);
    const cplx y = rng.box(-0.15, 0.15, -0.05, 0.05);
    const cplx lam = rng.box(-0.4, 0.4, -0.2, 0.2);
    const Matrix lhs = G.eval(z, y, {lam, 0.0});
    const Matrix rhs = r_plus_gl2(z, y, lam, l);
    CHECK(max_abs(lhs - rhs) < 1e-10 * std::max(1.0, max_abs(rhs)));
  }

  auto ident = [](cplx, const std::vector<cplx>&) {
    return Matrix(Matrix::Identity(2, 2));
  };
  const DynamicalRMatrix trivial = gauge_r(base, ident);
  const Matrix a = trivial.eval(cplx{0.3, 0.1}, cplx{0.1, 0.02}, {cplx{0.4, 0.0}, 0.0});
  const Matrix b = r_matrix_gl2(cplx{0.3, 0.1}, cplx{0.1, 0.02}, cplx{0.4, 0.0}, l);
  CHECK(max_abs(a - b) < 1e-12);
}

TEST_CASE("r_plus and r_minus each obey Yang-Baxter and inversion") {
  const LatticeParams l = lat();
  for (bool plus : {false, true}) {
    const DynamicalRMatrix R = wrap_scalar_gl2([l, plus](cplx z, cplx y, cplx lam) {
      return plus ? r_plus_gl2(z, y, lam, l) : r_minus_gl2(z, y, lam, l);
    });
    for (int trial = 0; trial < 12; ++trial) {
      Rng rng(derive_seed(plus ? 501 : 502, std::to_string(trial)));
      const cplx z = rng.box(-0.4, 0.4, -0.2, 0.2);
      const cplx w = rng.box(-0.4, 0.4, -0.2, 0.2);
      const cplx y = rng.box(-0.15, 0.15, -0.05, 0.05);
      const auto lam = sample_lambda_vec(2, rng);
      CHECK(check_dybe(R, z, w, y, lam) < 1e-9);
      CHECK(check_inversion(R, z, y, lam) < 1e-10);
    }
  }
}

TEST_CASE("tensor index helpers agree with the subset labeling") {
  // v_K puts v1 exactly in the slots listed by K
  const SubsetIndex K(4, {1, 3});
  const int idx = tensor_index_of_subset(K);
  CHECK(tensor_digit(idx, 1, 4) == 1);
  CHECK(tensor_digit(idx, 2, 4) == 2);
  CHECK(tensor_digit(idx, 3, 4) == 1);
  CHECK(tensor_digit(idx, 4, 4) == 2);
  CHECK(gl2_total_weight(idx, 4) == 0);
  CHECK(subset_of_tensor_index(idx, 4) == K);
  for (int i = 0; i < 16; ++i)
    CHECK(tensor_index_of_subset(subset_of_tensor_index(i, 4)) == i);
}
