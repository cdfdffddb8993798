// Elliptic dynamical R-matrix for gl_N, its dual and gauge transforms, the
// exchange operators S_i on tensor powers, and deviation checks for the
// dynamical Yang-Baxter and inversion relations.
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "ellqg/subsets.hpp"
#include "ellqg/theta.hpp"

namespace ellqg {

using Matrix = Eigen::MatrixXcd;

// Coefficient functions
//   alpha(z,y,lambda) =  theta(z) theta(lambda+y) / (theta(z-y) theta(lambda))
//   beta(z,y,lambda)  = -theta(z+lambda) theta(y) / (theta(z-y) theta(lambda))
// Throws pole_error when a denominator theta falls below `guard`.
cplx alpha_coeff(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                 double guard = 1e-12);
cplx beta_coeff(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                double guard = 1e-12);

// 4x4 matrix in the basis v1@v1, v1@v2, v2@v1, v2@v2 with scalar dynamical
// parameter lambda:
//   [1  0            0            0]
//   [0  alpha(l)     beta(l)      0]
//   [0  beta(-l)     alpha(-l)    0]
//   [0  0            0            1]
Matrix r_matrix_gl2(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                    double guard = 1e-12);

// N^2 x N^2 matrix, vector dynamical parameter (lambda_1..lambda_N):
//   sum_i E_ii@E_ii + sum_{i!=j} alpha(z,y,l_i-l_j) E_ii@E_jj
//                   + sum_{i!=j} beta(z,y,l_i-l_j)  E_ij@E_ji.
Matrix r_matrix_glN(cplx z, cplx y, const std::vector<cplx>& lambda,
                    const LatticeParams& lat, double guard = 1e-12);

// The two gl_2 R-matrices arising from reordering weight-function bases,
// same basis ordering and scalar dynamical parameter as r_matrix_gl2:
//   r_minus: middle block [alpha(-z,-l)  beta(-z,l); beta(-z,-l)  alpha(-z,l)]
//   r_plus:  middle block [alpha(z,-l)   beta(z,l);  beta(z,-l)   alpha(z,l)]
Matrix r_minus_gl2(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                   double guard = 1e-12);
Matrix r_plus_gl2(cplx z, cplx y, cplx lambda, const LatticeParams& lat,
                  double guard = 1e-12);

// An abstract dynamical R-matrix on (C^N)^{@2}. The dynamical argument is a
// vector of length N; shifts lambda - y h^{(s)} act on basis vector e_a in
// slot s by lambda_a -> lambda_a - y.
struct DynamicalRMatrix {
  int N = 2;
  std::function<Matrix(cplx z, cplx y, const std::vector<cplx>& lambda)> eval;
};

DynamicalRMatrix standard_r(int N, const LatticeParams& lat,
                            double guard = 1e-12);

// Wraps a scalar-parameter gl_2 family f(z,y,lambda) as a DynamicalRMatrix
// whose vector argument (l1,l2) enters through l1-l2 only.
DynamicalRMatrix wrap_scalar_gl2(
    std::function<Matrix(cplx, cplx, cplx)> f);

// Dual R-matrix: transpose of the inverse, under the standard identification
// of the space with its dual.
DynamicalRMatrix dual_r(const DynamicalRMatrix& R);

// Gauge transform by a weight-preserving psi(y,lambda) (N x N, expected
// diagonal for one-dimensional weight spaces):
//   R_psi(z,y,l) = psi2(l)^{-1} R(z,y,l) psi2(l)^{(21)},
//   psi2(l) = psi(l - y h^{(2)})^{(1)} psi(l)^{(2)}.
DynamicalRMatrix gauge_r(
    const DynamicalRMatrix& R,
    std::function<Matrix(cplx y, const std::vector<cplx>& lambda)> psi);

// Standard tensor indexing on (C^N)^{@n}: slot 1 is the most significant
// digit, digit value d in [0,N) encodes basis vector e_{d+1}.
int tensor_digit(int index, int slot, int n, int N = 2);  // returns 1..N
int gl2_weight(int index, int slot, int n);               // +1 for v1, -1 for v2
int gl2_total_weight(int index, int n);
int tensor_index_of_subset(const SubsetIndex& K);  // v1 exactly on members of K
SubsetIndex subset_of_tensor_index(int index, int n);

// Builds the matrix of F^{(p,q)} evaluated at lambda - y sum_{s in
// shift_slots} h^{(s)} on (C^N)^{@nslots}; F maps the shifted vector argument
// to an N^2 x N^2 two-slot matrix (F's first factor acts on slot p).
Matrix embed_two_slot(int N, int nslots, int p, int q,
                      const std::vector<int>& shift_slots, cplx y,
                      const std::vector<cplx>& lambda,
                      const std::function<Matrix(const std::vector<cplx>&)>& F);

// Same on (C^2)^{@n} with a scalar dynamical argument; the shift subtracts
// y times the total weight of the shift slots (+1 per v1, -1 per v2).
Matrix embed_two_slot_gl2(int n, int p, int q,
                          const std::vector<int>& shift_slots, cplx y,
                          cplx lambda,
                          const std::function<Matrix(cplx)>& F);

// 4x4 flip u@v -> v@u.
Matrix flip_gl2();

// S_i = R(z_i - z_{i+1}, y, lambda - y sum_{j>=i+2} h^{(j)})^{(i,i+1)}
// P^{(i,i+1)} on (C^2)^{@n}, n = params.n(), 1 <= i <= n-1.
Matrix s_operator(int i, const EllipticParams& params, double guard = 1e-12);

// Max relative entrywise deviation between the two sides of the dynamical
// Yang-Baxter equation on three slots, spectral arguments z, z+w, w:
//   R(z, l - y h3)^{12} R(z+w, l)^{13} R(w, l - y h1)^{23}
//     = R(w, l)^{23} R(z+w, l - y h2)^{13} R(z, l)^{12}.
double check_dybe(const DynamicalRMatrix& R, cplx z, cplx w, cplx y,
                  const std::vector<cplx>& lambda);

// Max deviation of R(z)^{12} R(-z)^{21} from the identity, relative to the
// largest entry of the product.
double check_inversion(const DynamicalRMatrix& R, cplx z, cplx y,
                       const std::vector<cplx>& lambda);

// Largest magnitude over entries whose row and column total weights differ;
// exactly zero for anything built from the constructors above.
double weight_block_leakage(const Matrix& m, int N, int nslots);

}  // namespace ellqg
