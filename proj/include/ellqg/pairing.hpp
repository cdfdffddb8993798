// Bilinear pairing between the minus and plus symmetric theta-function
// families, computed as a finite residue sum, plus the orthogonality
// relations it induces on weight functions.
//
// For k-variable functions f (minus family) and g (plus family) on the same
// evaluation points z_1..z_n, the pairing collapses to a sum over k-element
// subsets A of {1..n}:
//
//   <f,g> = sum_A f(z_A) g(z_A) /
//           [ prod_{a in A, b not in A} theta(z_a-z_b) theta(z_a-z_b+y)
//             * prod_{a != b in A} theta(z_a-z_b+y)^2 ].
//
// Each residue is taken by deleting the simple-pole factor (theta'(0) = 1)
// and substituting, never by numerical contour integration; the global
// theta(y)^k prefactor cancels against the diagonal factors and is already
// absorbed in the formula above. The sum is empty for k > n, so those
// pairings vanish identically.
#pragma once

#include <vector>

#include "ellqg/subsets.hpp"
#include "ellqg/theta.hpp"
#include "ellqg/weightfn.hpp"

#include <Eigen/Dense>

namespace ellqg {

// Evaluation-point data for a k-variable pairing. Constructed through
// make_pairing_context, which enforces the non-resonance hypothesis
// z_a != z_b + j*y (mod lattice) for 0 <= j <= n-1; j = 0 is the
// distinctness of the points themselves.
struct PairingContext {
  EllipticParams params;
  int k = 0;
  double guard = 1e-3;
};

// Validates the hypothesis within `guard` (as a lower bound on the
// corresponding |theta| values) and returns the context. Throws
// std::invalid_argument on resonant points or negative k.
PairingContext make_pairing_context(const EllipticParams& params, int k,
                                    double guard = 1e-3);

// <f,g> by the residue sum above. Requires f.sign == -1, g.sign == +1,
// f.k == g.k == ctx.k, and both functions carry the context's evaluation
// points; violations throw std::invalid_argument. For k = 0 the result is
// the exact product of the two constants. The returned .mag is the largest
// single term in the sum, the scale against which cancellation to zero
// should be measured.
Scaled pairing(const ThetaSymFn& f, const ThetaSymFn& g,
               const PairingContext& ctx);

// prod_{a in S, b not in S} theta(z_a - z_b) theta(z_a - z_b + y), the
// boundary factor separating a subset from its complement. Appears in the
// pairing denominators and in the dual orthogonality relation.
cplx boundary_theta_product(const SubsetIndex& S, const EllipticParams& params);

// Gram matrix of the pairing on the weight functions, rows indexed by the
// minus-family subset and columns by the plus-family subset, both in the
// order of subsets_of_size(n, k).
struct GramResult {
  Eigen::MatrixXcd values;
  std::vector<SubsetIndex> index;
  double scale = 0.0;  // largest term magnitude seen across all entries
};
GramResult orthogonality_matrix(int k, const PairingContext& ctx);

// Deviation of sum_K w^-_I(z_K) w^+_J(z_K) / boundary_theta_product(K)
// from delta_{IJ}, relative to the largest term in the sum.
double ortho_sum_check(const SubsetIndex& I, const SubsetIndex& J,
                       const PairingContext& ctx);

// Deviation of sum_J w^-_J(z_I) w^+_J(z_K) from
// delta_{IK} * boundary_theta_product(I), relative to the largest term.
double ortho_dual_check(const SubsetIndex& I, const SubsetIndex& K,
                        const PairingContext& ctx);

}  // namespace ellqg
