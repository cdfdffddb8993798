// The rank-one quantum-group action in its two realizations: evaluation
// L-operators on tensor products (matrix side) and difference operators on
// sections over the fixed-point components (geometric side), plus the
// structures tying them together: Gelfand-Zetlin eigenvectors, the quantum
// determinant, moment maps, the single-component sections xi-hat, the
// fixed-point evaluation operator ell, and deviation checks for every
// relation between these objects (RLL on both sides, action consistency,
// equivariance, pole cancellation, bundle multiplier data).
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "ellqg/envelope.hpp"
#include "ellqg/rmatrix.hpp"
#include "ellqg/subsets.hpp"
#include "ellqg/theta.hpp"
#include "ellqg/weightfn.hpp"

namespace ellqg {

// ---------------------------------------------------------------------------
// Matrix side: evaluation L-operators on (C^2)^{tensor n} with an auxiliary
// C^2 slot. The full matrix is 2^{n+1} square; global index =
// aux_digit * 2^n + body index, body indices as in tensor_index_of_subset
// (v1 exactly on the members of K). Block (i,j) is the coefficient matrix
// L_ij(w,z,y,lambda); in the functional picture L_{i2} composes with
// f(lambda+y) and L_{i1} with f(lambda-y).
// ---------------------------------------------------------------------------
struct LOperatorMatrix {
  int n = 0;
  std::function<Matrix(cplx w, const EllipticParams&)> full;

  // 2^n x 2^n coefficient block, i, j in {1, 2}.
  Matrix block(int i, int j, cplx w, const EllipticParams& params) const;
};

// The one-site representation on C^2 with evaluation point z (the params
// argument of the evaluators supplies lattice, y, lambda; its z list is
// ignored). Entries are placed explicitly:
//   L11 = diag(1, alpha(w-z, lambda)),   L12 v1 = beta(w-z, lambda) v2,
//   L22 = diag(alpha(w-z, -lambda), 1),  L21 v2 = beta(w-z, -lambda) v1,
// all other matrix elements zero.
LOperatorMatrix vector_rep_L(cplx z);

// The n-site operator: the ordered product over sites a = 1..n of the
// two-slot embeddings of R(w - z_a, y, lambda - y sum_{s > a} h^{(s)})
// acting on (aux, site a). Validates pole proximity at (w, params) eagerly.
LOperatorMatrix tensor_L(cplx w, const EllipticParams& params);

// Sector-diagonal prefactor times the 2x2-block combination
//   theta(lambda)/theta(lambda - y mu_K) *
//     (L11(w+y, lambda) L22(w, lambda-y) - L21(w+y, lambda) L12(w, lambda-y))
// with mu_K = 2|K| - n on the weight sector of K. Acts as the scalar
// prod_a theta(w - z_a + y)/theta(w - z_a) on the whole space.
Matrix quantum_determinant_alg(cplx w, const EllipticParams& params);

// Max relative entrywise deviation between the two sides of the RLL
// relation on (C^2)^{tensor(n+2)}, auxiliary slots 1 and 2 carrying w1, w2:
//   R12(w1-w2, lambda - y sum_{s>=3} h^{(s)}) L(w1)^{(1,body)} L(w2)^{(2,body)}
//     = L(w2)^{(2,body)} L(w1)^{(1,body)} R12(w1-w2, lambda)
// where L(w2) on the left carries the extra shift by h^{(1)} and L(w1) on
// the right the extra shift by h^{(2)}.
double rll_algebraic_deviation(cplx w1, cplx w2, const EllipticParams& params);

// Max relative deviation of the two Gelfand-Zetlin commutators
//   D(w1, lambda) M22(w2, lambda)   - M22(w2, lambda) D(w1, lambda+y)
//   M22(w1, lambda) M22(w2, lambda+y) - M22(w2, lambda) M22(w1, lambda+y)
// from zero (the lambda+y arguments implement the functional composition
// shift of an L_{i2} factor).
double gz_commutator_deviation(cplx w1, cplx w2, const EllipticParams& params);

// ---------------------------------------------------------------------------
// Gelfand-Zetlin eigenvectors.
// ---------------------------------------------------------------------------
struct GZEigenvector {
  SubsetIndex I;
  std::vector<SubsetIndex> index;  // the k-subsets, k = |I|
  Eigen::VectorXcd coordinates;    // coefficient of v_J, aligned with index

  // The coordinates placed into a 2^n vector at the tensor positions.
  Eigen::VectorXcd embedded() const;
};

// xi_I with coordinates w^-_J(z_I) / prod_{a in I, b not in I}
// theta(z_a - z_b + y). Simultaneous eigenvector: L22(w) with eigenvalue
// prod_{a in I} theta(w-z_a)/theta(w-z_a-y), determinant with eigenvalue
// prod_{a=1..n} theta(w-z_a+y)/theta(w-z_a).
GZEigenvector gz_eigenvector(const SubsetIndex& I, const EllipticParams& params);

// Relative eigenvector residuals (Euclidean norm over the eigenvector norm).
// The L22 residual compares M22(w, lambda) xi_I(lambda + y) against the
// eigenvalue times xi_I(lambda); the determinant carries no lambda shift.
double gz_l22_residual(const SubsetIndex& I, cplx w,
                       const EllipticParams& params);
double gz_delta_residual(const SubsetIndex& I, cplx w,
                         const EllipticParams& params);

// ---------------------------------------------------------------------------
// Geometric side: difference operators on component sections. An operator
// maps sections supported on the k-subsets to sections on the (k + mu/2)-
// subsets, reading its input at lambda + nu*y:
//   (op s)_K(lambda) = sum_{K'} coeff_{K,K'}(z,y,lambda) s_{K'}(lambda+nu*y).
// Coefficients are keyed by (output mask, input mask). bundle_form[k] is the
// multiplier data shared by all sector-k coefficients after stripping the
// component twisting: for every entry,
//   form(coeff_{K,K'}) = bundle_form[k] + T|_K^{out} - (T|_{K'}^{in} at
//   lambda + nu*y),
// where T|_K is the twisting form restricted to the component K. entry_form
// keeps the raw per-entry data for the primitive constructors (diagnostic
// only, empty on composites); neither form is used for computation.
// ---------------------------------------------------------------------------
struct DifferenceOperator {
  int n = 0;
  int mu = 0;  // weight change; output sector = input sector + mu/2
  int nu = 0;  // dynamical shift applied to the input section
  std::map<std::pair<std::uint32_t, std::uint32_t>,
           std::function<Scaled(const EllipticParams&)>>
      coefficients;
  std::map<int, QuadraticFormSpec> bundle_form;  // keyed by input sector
  std::map<std::pair<std::uint32_t, std::uint32_t>, QuadraticFormSpec>
      entry_form;
};

// The twisting form of the sector of K restricted to the component of K
// (t = z at K, s = z at the complement), on the (z, y, lambda) layout.
QuadraticFormSpec restricted_twisting(const SubsetIndex& K);

// Integer substitution lambda -> lambda + m*y on a (z_1..z_n, y, lambda)
// layout form.
QuadraticFormSpec lambda_shift_form(const QuadraticFormSpec& q, int m);

// Multiplication operator (mu = nu = 0) with the given per-component value;
// form, when supplied, gives the multiplier data of the value on component
// K and feeds bundle_form and entry_form.
DifferenceOperator diagonal_operator(
    int n,
    const std::function<Scaled(const SubsetIndex& K, const EllipticParams&)>&
        value,
    const std::function<QuadraticFormSpec(const SubsetIndex& K)>& form =
        nullptr);

// Composition a after b: coefficients sum over the middle component with
// b's matrix read at lambda + nu_a * y; mu and nu add; bundle forms combine
// per the grading law where both factors carry them.
DifferenceOperator compose(const DifferenceOperator& a,
                           const DifferenceOperator& b);

// Sum of two operators of equal (n, mu, nu). Bundle forms are kept where
// the two summands agree (or only one side acts on the sector) and dropped
// otherwise.
DifferenceOperator add(const DifferenceOperator& a,
                       const DifferenceOperator& b);

DifferenceOperator scale(const DifferenceOperator& a, cplx c);

// Applies the operator to a section. The output evaluators read the input
// values at lambda + nu*y; the output base form is bundle_form[s.k] plus
// the shifted input base form when the operator carries form data, and the
// zero form otherwise (such images are value-only).
ComponentSection apply(const DifferenceOperator& op, const ComponentSection& s);

// Value-only linear combination of sections of one sector (base form zero).
ComponentSection combine_sections(
    const std::vector<std::pair<cplx, ComponentSection>>& terms);

// ---------------------------------------------------------------------------
// The geometric generators at spectral parameter w.
// ---------------------------------------------------------------------------

// Multiplication by prod_{i=1..n} theta(w-z_i+y)/theta(w-z_i) on every
// component; mu = 0, nu = 0.
DifferenceOperator geo_Delta(int n, cplx w);

// Component K multiplies by prod_{i in K} theta(w-z_i)/theta(w-z_i-y);
// mu = 0, nu = +1. The inverse divides by the same product with nu = -1.
DifferenceOperator geo_L22(int n, cplx w);
DifferenceOperator geo_L22_inverse(int n, cplx w);

// Lowering operator, mu = -2, nu = +1: for an input section on the
// k-subsets and an output component K with |K| = k-1,
//   (op s)_K = (-1)^k theta(y) sum_{a not in K}
//     theta(lambda + w - z_a + (n-2k+1) y)/theta(w - z_a - y)
//     * prod_{j in K} theta(w - z_j)/theta(w - z_j - y)
//     * prod_{j in K} theta(z_a - z_j - y)
//       / prod_{j not in K, j != a} theta(z_a - z_j)
//     * s_{K u {a}}(lambda + y).
DifferenceOperator geo_L12(int n, cplx w);

// Raising operator, mu = +2, nu = -1: for input sector k and output K with
// |K| = k+1,
//   (op s)_K = (-1)^{n-k} theta(y)/(theta(lambda) theta(lambda-y))
//     * sum_{a in K} theta(lambda - w + z_a)/theta(w - z_a - y)
//     * prod_{j in K, j != a} theta(w - z_j)/theta(w - z_j - y)
//     * prod_{j not in K} theta(z_j - z_a - y)
//       / prod_{j in K, j != a} theta(z_j - z_a)
//     * s_{K \ {a}}(lambda - y).
DifferenceOperator geo_L21(int n, cplx w);

// Diagonal generator, mu = 0, nu = -1, assembled through the determinant:
//   L11(w) = (P^{-1} Delta(w-y) + L21(w) L12(w-y)) L22(w-y)^{-1},
// where P^{-1} multiplies sector k by theta(lambda + (n-2k) y)/theta(lambda).
DifferenceOperator geo_L11(int n, cplx w);

// Dispatch to the four generators by the (i, j) labels.
DifferenceOperator geo_L(int i, int j, int n, cplx w);

// Left and right multiplication insertions of a scalar function of the
// parameters: the right operator multiplies every component by
// s(z, y, lambda), the left one multiplies sector k by the value at
// lambda + (n-2k) y. s_form, when given, is the multiplier data of s on the
// (z, y, lambda) layout and populates the operators' form metadata.
std::pair<DifferenceOperator, DifferenceOperator> moment_maps(
    int n, const std::function<Scaled(const EllipticParams&)>& s,
    const QuadraticFormSpec* s_form = nullptr);

// moment_maps applied to theta(lambda), with form data.
std::pair<DifferenceOperator, DifferenceOperator> theta_moment_maps(int n);

// ---------------------------------------------------------------------------
// Structure checks on difference operators.
// ---------------------------------------------------------------------------

// True when every entry's raw form reproduces bundle_form of its sector
// after stripping the component twisting (integer part exactly, linear part
// within tol of the natural scale). Vacuous for operators without
// entry_form data.
bool bundle_forms_consistent(const DifferenceOperator& op, double tol = 1e-9);

// Worst multiplier_check deviation over all coefficient entries, each
// tested as a function of (z, y, lambda) against the form reconstructed
// from bundle_form[k] and the two twisting restrictions.
double operator_multiplier_deviation(const DifferenceOperator& op, int n,
                                     const LatticeParams& lat, int trials,
                                     std::uint64_t seed);

// Deviation from coefficient equivariance under the transposition of z_a
// and z_b: compares coeff_{sK, sK'} at the swapped parameters against
// coeff_{K,K'} at the original ones, maximized over entries.
double equivariance_deviation(const DifferenceOperator& op,
                              const EllipticParams& params, int a, int b);

// ---------------------------------------------------------------------------
// Sections supported on a single component.
// ---------------------------------------------------------------------------

// The combination sum_J w^-_J(z_I)/prod_{a in I, b not in I}
// theta(z_a - z_b + y) times the envelope class of J: restricts to
// prod_{a in I, b not in I} theta(z_a - z_b) on the component of I and to
// zero elsewhere. Carries the matching base form.
ComponentSection xi_hat_section(const SubsetIndex& I,
                                const EllipticParams& params);

// ---------------------------------------------------------------------------
// Cross checks between the two realizations.
// ---------------------------------------------------------------------------

// Worst relative deviation, over all input subsets I and output components,
// between applying the geometric generator (i, j) to the envelope class of
// I and the matrix-coefficient combination sum_K (tensor block)_{K,I} times
// the envelope class of K.
double e_action_deviation(int i, int j, cplx w, const EllipticParams& params);

// Geometric RLL with moment-map insertions, applied to the section s: for
// each of the 16 auxiliary matrix elements, compares
//   sum mu_l(R entry) L_{i'j}(w1) L_{k'l}(w2) s
// against
//   sum L_{kl'}(w2) L_{ij'}(w1) mu_r(R entry) s
// componentwise; returns the worst relative deviation.
double rll_geometric_check(cplx w1, cplx w2, const EllipticParams& params,
                           const ComponentSection& s);

// The corner matrix element of the same relation in isolation: the
// commutator [L11(w1), L11(w2)] applied to s (the corner entries of R are
// 1, so the insertions drop out).
double rll_corner_commutator_check(cplx w1, cplx w2,
                                   const EllipticParams& params,
                                   const ComponentSection& s);

// Behavior of the lowering operator's image near the excluded diagonal
// z_b = z_a: individual coefficient terms have simple poles there, the sum
// over terms does not. For delta in {1e-3, 1e-4, 1e-5} the report records
// the largest image component magnitude (boundedness: no 1/delta growth)
// and the worst mismatch between the glued components K and K \ {a} u {b},
// measured relative to that image scale (it must shrink linearly with
// delta).
struct PoleCancellationReport {
  std::array<double, 3> deltas{1e-3, 1e-4, 1e-5};
  std::array<double, 3> image_scale{0.0, 0.0, 0.0};
  std::array<double, 3> gluing_gap{0.0, 0.0, 0.0};
};
PoleCancellationReport pole_cancellation_report(cplx w, const SubsetIndex& I,
                                                const EllipticParams& params,
                                                int a, int b);

// Cross-check of the diagonal generator against the basis-expansion route:
// expands s in the weight-function basis at lambda - y, transports the
// coefficients with the matrix block (1,1), resums against the envelope
// values, and compares with apply(geo_L11, s). Exercises the pole structure
// of the composed operator at the sampled parameters.
double l11_expansion_deviation(cplx w, const EllipticParams& params,
                               const ComponentSection& s);

// ---------------------------------------------------------------------------
// The fixed-point evaluation operator ell on C^2 tensor the weight-function
// space, in the omega^+ basis (global index (j-1) 2^n + body index of J).
// Column (i, I) is found by evaluating both shuffle embeddings at the
// |I| + [i = 1] sized subsets of the points (w, z_1, .., z_n) and solving
// the square linear system.
// ---------------------------------------------------------------------------
Matrix ell_operator(cplx w, const EllipticParams& params);

// Conjugation of ell_operator into the tensor normalization: row (j, J)
// carries psi_jj(lambda - y wt_J) Psi_J(lambda), column (i, I) divides by
// psi_ii(lambda) Psi_I(lambda - y mu_i), with psi_11 = theta(lambda)
// theta(lambda - y), psi_22 = 1, Psi the psi_coeff normalization and
// wt_J = 2|J| - n, mu_1 = +1, mu_2 = -1.
Matrix ell_gauged(cplx w, const EllipticParams& params);

// Max relative deviation between ell_gauged and the full tensor_L matrix.
double ell_vs_tensor_check(cplx w, const EllipticParams& params);

// Dynamical Yang-Baxter relation for ell itself on C^2 x C^2 x W:
//   R+(w1-w2, lambda - y h^3)^{(12)} ell(w1, lambda)^{(13)}
//     ell(w2, lambda - y h^1)^{(23)}
//   = ell(w2, lambda)^{(23)} ell(w1, lambda - y h^2)^{(13)}
//     R+(w1-w2, lambda)^{(12)},
// where h^i reads the gl_2 weight of slot i. The R-factor argument carries
// the W-sector weight on the left side only; conjugating ell into tensor_L
// coordinates turns this into the same relation with the unsigned R-matrix,
// which is how the sector bookkeeping was fixed.
double ell_ybe_check(cplx w1, cplx w2, const EllipticParams& params);

}  // namespace ellqg
