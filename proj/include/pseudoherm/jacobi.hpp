#pragma once

#include <functional>
#include <vector>

#include "pseudoherm/connection.hpp"
#include "pseudoherm/geodesics.hpp"

namespace pseudoherm {

// ===========================================================================
// Parallel frames along an integrated curve
// ===========================================================================

// A g-orthonormal frame E_1 … E_{2n+1} transported by ∇_γ̇ E = 0, stored at
// every node and interval midpoint of the curve's grid. For a unit-speed
// lengthy curve the frame is adapted: E_1 = γ̇, E_2 = J γ̇, the last slot is
// the Reeb vector, and both the Gram matrix and the frame-level J stay
// constant in time up to the recorded drifts (∇g = ∇J = ∇T = 0).
struct ParallelFrame {
  std::vector<double> t_grid;  // node parameters of the underlying curve
  std::vector<Mat> frames;     // half-grid: index 2k = node k, 2k+1 = the
                               // midpoint of [t_k, t_{k+1}]
  double gram_drift = 0.0;     // max node deviation of Eᵀ g E from identity
  double j_drift = 0.0;        // max node deviation of Eᵀ g J E from its
                               // value at the initial node

  int nodes() const { return static_cast<int>(t_grid.size()); }
  const Mat& at_node(int k) const { return frames[2 * k]; }
  const Mat& at_midpoint(int k) const { return frames[2 * k + 1]; }
};

ParallelFrame parallel_frame(const CurveSolution& sol);

// ===========================================================================
// Jacobi workspace: cached equation coefficients
// ===========================================================================

// Coefficients of the geodesic deviation equation in the parallel frame,
// cached at every node and midpoint of a unit-speed lengthy geodesic:
//
//   s    = frame components of τ(γ̇)
//   r    = frame components of (∇_γ̇ τ) γ̇
//   m    = curvature matrix, m(c, a) = g(R(E_a, γ̇) γ̇, E_c)
//   a_vv = A(γ̇, γ̇)
//
// A field X = Σ u_c E_c is Jacobi exactly when
//
//   ü = 2 |γ̇| u̇_2 e_T − u̇_T s − u_T r − m u ,
//
// where e_T is the Reeb slot. Building the workspace costs one curvature
// sample per half-grid point; every operation below is then linear algebra
// on the cached tables and may share one workspace across many calls.
struct JacobiWorkspace {
  CurveSolution sol;  // private copy; the model stays alive via shared_ptr
  ParallelFrame frame;
  std::vector<Vec> s;         // empty when the model is torsion-free
  std::vector<Vec> r;         // empty when the model is torsion-free
  std::vector<Mat> m;         // half-grid curvature matrices
  std::vector<double> a_vv;   // half-grid torsion diagonal A(γ̇, γ̇)
  double speed = 1.0;         // |γ̇|, constant along the geodesic
  bool sasakian = false;      // τ vanished along the curve within 1e−12
  int dim = 0;                // frame size 2n+1

  int nodes() const { return static_cast<int>(sol.t_grid.size()); }
  double t0() const { return sol.t_grid.front(); }
  double t1() const { return sol.t_grid.back(); }
};

JacobiWorkspace make_jacobi_workspace(const CurveSolution& sol);

// ===========================================================================
// Fields along the curve
// ===========================================================================

// One smooth piece of a field: frame components u, u̇, ü sampled at the node
// range [k0, k0 + cols − 1] and valid on [lo, hi] ⊆ [t_{k0}, t_{k0+cols−1}].
struct FieldPiece {
  double lo = 0.0;
  double hi = 0.0;
  int k0 = 0;
  Mat u, du, ddu;  // (2n+1) × cols
};

// A piecewise-C¹ field along the integrated curve in parallel-frame
// components, with cubic Hermite dense output: u interpolates the (u, u̇)
// node pairs and u̇ the (u̇, ü) pairs, so both are fourth-order accurate.
// Corners sit at interior piece boundaries; evaluating exactly at a corner
// takes the side prefer_left selects.
struct CurveField {
  std::vector<double> t_grid;
  std::vector<FieldPiece> pieces;

  double lo() const;
  double hi() const;
  Vec u_at(double t, bool prefer_left = true) const;
  Vec du_at(double t, bool prefer_left = true) const;
  // Interior piece boundaries, in increasing order.
  std::vector<double> corners() const;
};

// Samples a smooth field given by callables (components and their first two
// t-derivatives in the parallel frame) into a single-piece CurveField on
// [lo, hi].
CurveField sample_field(const JacobiWorkspace& ws, double lo, double hi,
                        const std::function<Vec(double)>& u,
                        const std::function<Vec(double)>& du,
                        const std::function<Vec(double)>& ddu);

// A Jacobi field produced by the integrator: a single piece covering the
// whole curve domain, plus its seeds and the measured equation residual
// (sup norm of a fourth-order difference check at interior nodes).
struct JacobiField : CurveField {
  Vec seed_u, seed_du;  // initial frame components X(t₀), X′(t₀)
  double residual = 0.0;
};

// ===========================================================================
// Integration and structure of Jacobi fields
// ===========================================================================

// Integrates the Jacobi equation along a unit-speed lengthy connection
// geodesic (RK4 on the curve's own grid, coefficients at midpoints) from the
// initial frame components X0 = X(t₀), X0p = X′(t₀). The integration is
// exactly linear in the seeds. Requires a lengthy unit-speed curve whose
// multiplier channel vanishes.
JacobiField integrate_jacobi(const CurveSolution& sol, const Vec& X0,
                             const Vec& X0p);
JacobiField integrate_jacobi(const JacobiWorkspace& ws, const Vec& X0,
                             const Vec& X0p);

// Sup-norm residual of the Jacobi equation over the field's interior nodes,
// by a fourth-order five-point second difference of u against the cached
// right-hand side. Pieces too short for the stencil contribute nothing.
double jacobi_residual(const JacobiWorkspace& ws, const CurveField& field);

// Residual of the reduced equation ü_H + m_H u_H = 0 satisfied by the
// horizontal part of every Jacobi field on torsion-free models (the Reeb
// coupling drops out of the horizontal block).
double reduced_jacobi_residual(const JacobiWorkspace& ws,
                               const CurveField& field);

// Splitting X = a γ̇ + b t γ̇ + Y of a Jacobi field, where Y's pairing with
// γ̇ integrates the torsion diagonal: g(Y, γ̇)(t) = −∫ u_T A(γ̇, γ̇). The
// slant residual reports how well the returned Y satisfies that relation.
// Non-Jacobi input (equation residual beyond 1e−6 at unit field scale) is a
// domain error.
struct JacobiSplit {
  double a = 0.0;
  double b = 0.0;
  JacobiField y;
  double slant_residual = 0.0;
};

JacobiSplit decompose(const CurveSolution& sol, const JacobiField& field);
JacobiSplit decompose(const JacobiWorkspace& ws, const JacobiField& field);

// A quantity that should be constant in t: its mean over nodes and the
// largest deviation from that mean.
struct TrackedConstant {
  double value = 0.0;
  double drift = 0.0;
};

// The two first integrals carried by every Jacobi field X:
//   tangential: d/dt g(X, γ̇) + θ(X) A(γ̇, γ̇)
//   contact:    d/dt θ(X) − 2 Ω(X, γ̇)
struct JacobiConstants {
  TrackedConstant tangential;
  TrackedConstant contact;
};

JacobiConstants jacobi_constants(const CurveSolution& sol,
                                 const JacobiField& field);
JacobiConstants jacobi_constants(const JacobiWorkspace& ws,
                                 const CurveField& field);

// ===========================================================================
// Conjugate points and solution-space dimensions
// ===========================================================================

struct ConjugatePoint {
  double t = 0.0;
  int multiplicity = 0;
};

// Zeros on (t₀, t_max] of det V(t), where V's columns are the Jacobi fields
// seeded by X(t₀) = 0, X′(t₀) = e_c. Roots are bracketed by a sign change
// over the nodes and bisected on the dense output to |Δt| < 1e−8; ties at a
// node resolve toward the smaller t. Multiplicity counts singular values of
// V(t*) below 1e−6 · σ_max. t_max beyond the curve domain is an error.
std::vector<ConjugatePoint> conjugate_points(const CurveSolution& sol,
                                             double t_max);
std::vector<ConjugatePoint> conjugate_points(const JacobiWorkspace& ws,
                                             double t_max);

// Parameters t* in (t₀, t_max] where some everywhere-horizontal Jacobi field
// with X(t₀) = 0 vanishes again. The candidate space is cut out of the 2n
// horizontally seeded fields by requiring the Reeb component to stay below
// 1e−8 in sup norm; within that space, vanishing parameters are located by
// dips of the smallest singular value (golden-section refinement, accepted
// below 1e−6 · σ_max). Empty when no horizontal field vanishes at t₀ at all.
std::vector<double> horizontally_conjugate(const CurveSolution& sol,
                                           double t_max);
std::vector<double> horizontally_conjugate(const JacobiWorkspace& ws,
                                           double t_max);

// Numerical dimension of the full Jacobi solution space along the curve:
// the rank of the seed → trajectory map over all 2(2n+1) canonical seeds
// (singular values above 1e−6 · σ_max). Expected value 4n + 2.
int jacobi_dim(const CurveSolution& sol);
int jacobi_dim(const JacobiWorkspace& ws);

// Numerical dimension of the horizontal deviation space: the rank of the
// seed → trajectory map of the reduced horizontal equation ü_H + m_H u_H = 0
// over its 4n canonical seeds. Expected value 4n.
int horizontal_dim(const CurveSolution& sol);
int horizontal_dim(const JacobiWorkspace& ws);

// ===========================================================================
// Index forms
// ===========================================================================

// Second-variation index form of a unit-speed lengthy geodesic on a
// torsion-free model, for piecewise-C¹ fields vanishing at a and b:
//
//   I(X, Y) = (1/r) ∫ₐᵇ { g(∇X⊥, ∇Y⊥) − g(R(X⊥, γ̇) γ̇, Y⊥)
//                         − 2 Ω(X⊥, γ̇) θ(∇Y⊥)
//                         − 2 [θ(∇X⊥) − 2 Ω(X⊥, γ̇)] Ω(Y⊥, γ̇) } dt ,
//
// where X⊥ = X − r⁻² g(X, γ̇) γ̇. Symmetric in (X, Y) after integration.
// Requires a torsion-free workspace and endpoint-vanishing fields.
double index_form(const CurveSolution& sol, const CurveField& x,
                  const CurveField& y, double a, double b);
double index_form(const JacobiWorkspace& ws, const CurveField& x,
                  const CurveField& y, double a, double b);

// Endpoint-restricted index integral without the perpendicular projection,
// the Reeb coupling terms, or the 1/r factor:
//
//   I_a^b(X) = ∫ₐᵇ { g(∇X, ∇X) − g(R(X, γ̇) γ̇, X) } dt .
//
// Coincides with r · index_form(X, X) when X ⊥ γ̇ and X ⊥ J γ̇.
double index_I_ab(const CurveSolution& sol, const CurveField& x, double a,
                  double b);
double index_I_ab(const JacobiWorkspace& ws, const CurveField& x, double a,
                  double b);

// ===========================================================================
// Boundary value problems and the nonminimality construction
// ===========================================================================

// The Jacobi field with X(ta) = Xa and X(tb) = Xb, found by shooting with
// the full fundamental system. A numerically singular shooting matrix
// (smallest singular value below 1e−8 · σ_max) means the endpoints are
// conjugate and raises ConjugateIntervalError. The returned field is defined
// on the whole curve domain.
JacobiField jacobi_bvp(const CurveSolution& sol, double ta, double tb,
                       const Vec& Xa, const Vec& Xb);
JacobiField jacobi_bvp(const JacobiWorkspace& ws, double ta, double tb,
                       const Vec& Xa, const Vec& Xb);

// A piecewise Jacobi field with strictly negative index across a horizontally
// conjugate pair (γ(a), γ(c)): Y is an everywhere-horizontal Jacobi field
// vanishing at a and c, Z solves the boundary value problem joining
// Y(c − δ) to 0, and
//
//   X = Y on [a, c − δ],  Z on [c − δ, c + δ],  0 on [c + δ, b] ,
//
// with the window endpoints snapped to grid nodes. The returned index is
// I_a^b(X) < 0; the field is horizontal and perpendicular to both γ̇ and
// J γ̇, so the index measures a genuine length decrease. Hypothesis
// failures (no horizontal conjugacy, window not inside (a, b), maximal
// horizontal dimension, a conjugate pair inside the window) raise the named
// errors.
struct BrokenIndexField {
  CurveField field;       // the assembled piecewise field X
  double index = 0.0;     // I_a^b(X)
  double window_left = 0.0;
  double window_right = 0.0;
  JacobiField smooth_part;  // Y, horizontal, vanishing at a and c
  JacobiField window_part;  // Z, the joining field on the window
};

BrokenIndexField negative_index_field(const CurveSolution& sol, double a,
                                      double c, double b, double delta);
BrokenIndexField negative_index_field(const JacobiWorkspace& ws, double a,
                                      double c, double b, double delta);

// Index comparison on a torsion-free model without conjugate points in
// (a, b]: among fields vanishing at a, perpendicular to γ̇, and agreeing at
// b, the everywhere-horizontal Jacobi field Y minimizes I_a^b. Preconditions
// (torsion-free model, no conjugate point, Y horizontal Jacobi with
// Y(a) = 0 ⊥ γ̇, X(a) = 0 ⊥ γ̇, X(b) = Y(b)) are checked and raise domain
// errors naming the failed clause.
struct IndexComparison {
  double i_x = 0.0;
  double i_y = 0.0;
  bool inequality_holds = false;  // i_x ≥ i_y − 1e−8
  bool equal_within_tol = false;  // |i_x − i_y| ≤ 1e−8
  bool fields_match = false;      // sup node distance below 1e−6
};

IndexComparison index_comparison(const CurveSolution& sol, const CurveField& x,
                                 const CurveField& y, double a, double b);
IndexComparison index_comparison(const JacobiWorkspace& ws,
                                 const CurveField& x, const CurveField& y,
                                 double a, double b);

}  // namespace pseudoherm
