// Fixed-point-component sections, quadratic-form multiplier data for line
// bundles on powers of the elliptic curve, the stable envelope built from
// weight functions, its axiomatic characterization, and the component-wise
// correspondence phi with the symmetric theta-function spaces.
//
// A line bundle is represented only by its multiplier data: a symmetric
// integer matrix N and a complex vector v. A function f on C^p is a section
// exactly when
//
//   f(x + e_j)     = (-1)^{N_jj} f(x),
//   f(x + tau e_j) = (-1)^{N_jj} exp(-2 pi i (sum_m N_jm x_m + v_j)
//                                    - pi i tau N_jj) f(x),
//
// for every coordinate j. Every theta factor theta(sum_m r_m x_m + c)
// contributes r r^t to N and c*r to v, which is how all the forms below are
// assembled and checked.
#pragma once

#include <functional>
#include <vector>

#include "ellqg/subsets.hpp"
#include "ellqg/theta.hpp"
#include "ellqg/weightfn.hpp"

#include <Eigen/Dense>

namespace ellqg {

// Multiplier data (N, v) of a line bundle on E^p in fixed coordinates.
struct QuadraticFormSpec {
  int p = 0;
  Eigen::MatrixXi N;
  Eigen::VectorXcd v;
};

QuadraticFormSpec zero_form(int p);

// Adds mult copies of the multiplier data of theta(l(x) + shift) where
// l(x) = sum of coeff * x_idx over the given (idx, coeff) terms. Negative
// mult removes a factor (a denominator).
void add_theta_factor(QuadraticFormSpec& q,
                      const std::vector<std::pair<int, int>>& terms,
                      cplx shift, int mult = 1);

// Adds 2 * mult * x_i * x_j (i != j) to the quadratic form.
void add_cross_term(QuadraticFormSpec& q, int i, int j, int mult);

// Adds mult * x_i^2.
void add_diag_term(QuadraticFormSpec& q, int i, int mult);

QuadraticFormSpec add_forms(const QuadraticFormSpec& a,
                            const QuadraticFormSpec& b);

// Linear change of variables x_old = S * x_new with an integer p_old x p_new
// matrix S: returns the form S^t N S with linear part S^t v. Used for
// merging coordinates (substituting t = z_K) and for integer shifts of the
// dynamical parameter (lambda -> lambda + m y).
QuadraticFormSpec substitute_form(const QuadraticFormSpec& q,
                                  const Eigen::MatrixXi& S, int p_new);

// Worst relative deviation, over sampled points and all p coordinates, of
// f's actual behavior under x_j -> x_j + 1 and x_j -> x_j + tau from the
// multiplier prescribed by the form data. Each comparison is floored at
// 1e-6 of the computation scale carried by the Scaled values, so functions
// that cancel to zero at a point register as exact instead of as 0/0 noise.
double multiplier_check(
    const std::function<Scaled(const std::vector<cplx>&)>& f,
    const QuadraticFormSpec& spec, const LatticeParams& lat, int trials,
    std::uint64_t seed);

// ---------------------------------------------------------------------------
// The standard forms. Coordinate layouts:
//   twisting_form(k, n):      (t_1..t_k, s_1..s_{n-k}, y, lambda), p = n+2
//   theta_space_form(k, n):   (t_1..t_k, z_1..z_n, y, lambda),     p = k+n+2
//   weight_class_form(I):     (z_1..z_n, y, lambda),               p = n+2
//   omega_plus_full_form(I):  (t_1..t_k, z_1..z_n, y, lambda),     p = k+n+2
//   psi_form(I):              (z_1..z_n, y, lambda),               p = n+2
//   shuffle_shift_form:       (t_1..t_k, z_1..z_n, y, lambda) for the
//                             combined blocks, k = k'+k'', n = n'+n''
// ---------------------------------------------------------------------------

// 2 sum_i t_i (lambda + (n-k) y) + sum_{i,j} (t_i - s_j)^2.
QuadraticFormSpec twisting_form(int k, int n);

// 2 sum_i t_i (lambda + (n-k) y) + sum_{i,a} (t_i - z_a)^2 + k(k-1) y^2.
QuadraticFormSpec theta_space_form(int k, int n);

// The base form of the admissible bundle carrying the stable envelope class
// of the subset I.
QuadraticFormSpec weight_class_form(const SubsetIndex& I);

// Exact multiplier data of omega^+_I as a function of all coordinates,
// assembled factor by factor from its symmetrized product formula.
QuadraticFormSpec omega_plus_full_form(const SubsetIndex& I);

// Multiplier data of psi_I as a function of (y, lambda), embedded in the
// (z, y, lambda) layout.
QuadraticFormSpec psi_form(const SubsetIndex& I);

// k'' y ((n'-k') y - 2 sum_{a <= n'} z_a) on the combined coordinate layout.
QuadraticFormSpec shuffle_shift_form(int k_prime, int n_prime, int k_dprime,
                                     int n_dprime);

// Multiplier data of the boundary kernel the two-block shuffle product
// inserts: the pair ratios theta(t_j - t_l + y)/theta(t_j - t_l) over
// j <= k' < l and the two mixed block factors. Combined coordinate layout.
QuadraticFormSpec shuffle_kernel_form(int k_prime, int n_prime, int k_dprime,
                                      int n_dprime);

// Embedding of one block's (t, z, y, lambda) coordinates into the combined
// layout, as a substitution matrix for substitute_form. block is 1 or 2;
// block 1 carries the dynamical shift lambda -> lambda + (n'' - 2 k'') y.
Eigen::MatrixXi shuffle_block_embedding(int k_prime, int n_prime, int k_dprime,
                                        int n_dprime, int block);

// ---------------------------------------------------------------------------
// Sections over the fixed-point components.
// ---------------------------------------------------------------------------

// A collection of evaluators indexed by the k-subsets of {1..n}, one per
// fixed-point component, together with the base-part multiplier data of the
// admissible bundle it is declared to live in (the twisting part is implied
// and component-dependent).
struct ComponentSection {
  int n = 0;
  int k = 0;
  std::vector<SubsetIndex> index;
  std::vector<std::function<Scaled(const EllipticParams&)>> values;
  QuadraticFormSpec base_form;  // on (z_1..z_n, y, lambda)
};

cplx section_value(const ComponentSection& s, const SubsetIndex& K,
                   const EllipticParams& params);

// For every component K, checks the evaluator as a function of
// (z, y, lambda) against base_form plus the twisting form restricted to the
// component (t = z_K, s = z_{complement}). Returns the worst deviation.
double section_multiplier_check(const ComponentSection& s,
                                const LatticeParams& lat, int trials,
                                std::uint64_t seed);

// Deviation between the K and K\{a} u {b} evaluators at the given parameters
// with z_b collided onto z_a, maximized over all components K with a in K,
// b not in K. Sections of a single bundle must agree there.
double gluing_check(const ComponentSection& s, const EllipticParams& params,
                    int a, int b);

// The stable envelope class of the subset I: component values
// J -> w^+_I(z_J), base form weight_class_form(I).
struct StableEnvelopeClass {
  SubsetIndex subset;
  ComponentSection section;
};

// Throws pole_error when psi_I nearly vanishes at the given parameters.
StableEnvelopeClass stab(const SubsetIndex& I, const EllipticParams& params);

// The three numerically checkable characterizing properties of the stable
// envelope class, plus the triangularity it implies. Deviations are
// relative; the divisor figure is the worst residual of psi_I * (component
// value at Y_J) on the sampled loci z_a = z_b - y for a in J, b outside J,
// b < a, measured against the same quantity at the unconstrained sample
// point so zeros reached through a small theta factor count as exact.
struct AxiomaticReport {
  double multiplier_deviation = 0.0;
  double diagonal_deviation = 0.0;
  double divisor_deviation = 0.0;
  double triangularity_deviation = 0.0;
};

AxiomaticReport axiomatic_check(const SubsetIndex& I,
                                const EllipticParams& params, int samples,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// The component-wise correspondence with symmetric theta functions.
// ---------------------------------------------------------------------------

// Sends a k-variable plus-family function f to the section with components
//   K -> f(t) / prod_{i != j} theta(t_i - t_j + y) at t = z_K,
// declared in the purely twisting bundle (base form zero). The returned
// evaluators freeze f itself; they are meant to be evaluated at the same
// parameters f was built on.
ComponentSection phi_map(const ThetaSymFn& f, const EllipticParams& params);

// Expansion of a section in the weight-function basis: coefficient of
// omega^+_K is  psi_K^{-1} sum_I w^-_K(z_I) s_I / prod_{a in I, b not in I}
// theta(z_a - z_b) theta(z_a - z_b + y), and f is the corresponding linear
// combination. Inverts phi_map at generic parameters.
struct PhiExpansion {
  std::vector<SubsetIndex> index;
  Eigen::VectorXcd coeffs;
  ThetaSymFn f;
};

// Throws std::invalid_argument when the parameters sit near the excluded
// divisor (z_a = z_b + y or lambda = j y, |j| <= n).
PhiExpansion phi_inverse(const ComponentSection& s,
                         const EllipticParams& params, double guard = 1e-3);

// Worst multiplier deviation of the two-block shuffle product family
// against theta_space_form(k, n) plus shuffle_shift_form plus the full-form
// corrections of the two weight-function factors. Exercises the lattice
// transformation law of the shuffle product in all coordinates.
double shuffle_multiplier_shift_check(int k_prime, int n_prime, int k_dprime,
                                      int n_dprime, const LatticeParams& lat,
                                      int trials, std::uint64_t seed);

}  // namespace ellqg
