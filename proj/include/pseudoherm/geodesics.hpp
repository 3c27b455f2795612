#pragma once

#include <memory>
#include <vector>

#include "pseudoherm/manifold.hpp"

namespace pseudoherm {

// ===========================================================================
// Curve solutions with cubic Hermite dense output
// ===========================================================================

// A numerically integrated curve: fixed-step RK4 nodes plus the stored state
// derivatives, interpolated by cubic Hermite polynomials between nodes. The
// b channel (the sub-Riemannian multiplier, or ξ(T) on Hamiltonian curves)
// is empty when the integrator has no such quantity.
struct CurveSolution {
  std::shared_ptr<const ModelManifold> model;
  std::vector<double> t_grid;
  std::vector<Vec> x;    // base point per node
  std::vector<Vec> v;    // velocity per node (= ẋ)
  std::vector<Vec> dv;   // acceleration per node (ODE right-hand side)
  std::vector<double> b;   // multiplier per node, may be empty
  std::vector<double> db;  // multiplier derivative, may be empty
  std::vector<Vec> xi;     // covector per node (Hamiltonian curves only)
  double h = 0.0;

  // True when the initial velocity was horizontal, so the curve is lengthy.
  bool lengthy = false;
  // max over nodes of |θ(γ̇)| and of the relative speed drift.
  double theta_residual_max = 0.0;
  double speed_drift_rel = 0.0;

  double t0() const { return t_grid.front(); }
  double t1() const { return t_grid.back(); }
  int nodes() const { return static_cast<int>(t_grid.size()); }

  // Dense output. position/velocity/multiplier are cubic Hermite on the
  // stored (value, derivative) pairs; acceleration differentiates the
  // velocity interpolant (exact at nodes).
  Vec position(double t) const;
  Vec velocity(double t) const;
  Vec acceleration(double t) const;
  double b_at(double t) const;

  // |γ̇(t)| in the Webster metric.
  double speed(double t) const;
};

// A cotangent lift of a lengthy curve: covector nodes ξ(t_k) over the base
// curve, plus the vertical offset a(t_k) when the lift carries one
// (ξ = ξ₀ + a θ; the canonical lift has a ≡ 0).
struct CotangentLift {
  std::vector<double> t_grid;
  std::vector<Vec> xi;
  std::vector<double> a;
};

// ===========================================================================
// Integrators (fixed-step RK4, default h = 1e−3)
// ===========================================================================

// Geodesic of the canonical connection: ∇_γ̇ γ̇ = 0. Horizontal initial
// velocity stays horizontal (lengthy curve); general v0 is allowed.
CurveSolution integrate_tw_geodesic(std::shared_ptr<const ModelManifold> model,
                                    const Vec& x0, const Vec& v0, double t_max,
                                    double h);

// Sub-Riemannian geodesic in connection form:
//   ∇_γ̇ γ̇ = −2 b(t) J γ̇,   b′ = A(γ̇, γ̇),   b(0) = b0.
// Requires horizontal nonzero v0.
CurveSolution integrate_sr_geodesic(std::shared_ptr<const ModelManifold> model,
                                    const Vec& x0, const Vec& v0, double b0,
                                    double t_max, double h);

// Hamiltonian route: ẋ = ∂H/∂ξ, ξ̇ = −∂H/∂x for H(x,ξ) = ½ ξᵀ G(x) ξ with
// the contact cometric G = Σ_a e_a e_aᵀ. Velocity nodes store ẋ = G ξ; the
// b channel stores ξ(T).
CurveSolution integrate_hamiltonian(std::shared_ptr<const ModelManifold> model,
                                    const Vec& x0, const Vec& xi0, double t_max,
                                    double h);

// Momentum matching the connection-form initial data (v0, b0):
// ξ0 = g v0 + b0 θ, so that both routes integrate the same geodesic.
Vec hamiltonian_momentum(const ModelManifold& model, const Vec& x0,
                         const Vec& v0, double b0);

// ===========================================================================
// Cotangent lifts and the vertical coefficient
// ===========================================================================

// Canonical cotangent lift ξ_j = G_{ij} ẋ^i + θ_j of a lengthy curve;
// satisfies ξ(T) = 1 and g ξ = γ̇ at every node.
CotangentLift canonical_lift(const CurveSolution& sol);

// Vertical coefficient of the unique Hamiltonian cotangent lift,
//   a(t) = −(1/2) |γ̇|⁻² g(D_γ̇ γ̇, J γ̇) − 1,
// with D the Riemannian connection of the Webster metric. Interior t only.
double strichartz_a(const CurveSolution& sol, double t);

// Arc length ∫_a^b |γ̇| dt by composite Simpson over the dense output.
double curve_length(const CurveSolution& sol, double a, double b);

}  // namespace pseudoherm
