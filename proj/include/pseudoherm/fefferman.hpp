#pragma once

#include <memory>
#include <vector>

#include "pseudoherm/geodesics.hpp"
#include "pseudoherm/manifold.hpp"

namespace pseudoherm {

// ===========================================================================
// The circle bundle over a flat group model
// ===========================================================================
//
// Points of C(M) = M × S¹ carry a fiber angle r next to the chart
// coordinates of the base. The canonical connection form in the flat
// normalization is σ = dr/(n+2), the vertical generator is Σ = ∂_r, and the
// Lorentz metric on C(M) is
//
//   F = π*G̃ + 2 (π*θ) ⊙ σ,      G̃ = g − θ ⊗ θ,
//
// with the unnormalized symmetric product a ⊙ b = a ⊗ b + b ⊗ a. In chart
// blocks: F_ij = (g − θθᵀ)_ij, F_{i r} = 2 θ_i/(n+2), F_{r r} = 0, which has
// signature (2n+1, 1). Only flat group models are supported: there the
// pseudohermitian structure constants entering σ all vanish, so σ is exact
// and the construction needs no curvature corrections.

struct CirclePoint {
  ChartPoint base;
  double fiber = 0.0;  // reduced to [0, 2π)
};

// A curve on the circle bundle: nodes hold (chart coords, fiber angle) with
// the fiber left unreduced so dense interpolation stays smooth.
struct CircleCurve {
  std::shared_ptr<const ModelManifold> model;
  std::vector<double> t_grid;
  std::vector<Vec> nodes;       // chart_dim + 1 entries per node
  std::vector<Vec> velocities;  // matching time derivatives
  double h = 0.0;

  double t0() const { return t_grid.front(); }
  double t1() const { return t_grid.back(); }
  // Cubic Hermite dense output on the stored (value, derivative) pairs.
  Vec position(double t) const;
  Vec velocity(double t) const;
  CirclePoint point(double t) const;
};

CirclePoint make_circle_point(const ModelManifold& model, const Vec& base,
                              double fiber);

// ===========================================================================
// Metric data
// ===========================================================================

// Pointwise evaluators for F: the metric matrix in (chart, fiber)
// coordinates, the connection form σ, and Christoffel symbols by central
// differences of the metric components.
struct FeffermanMetricData {
  std::shared_ptr<const ModelManifold> model;
  int dim = 0;           // chart_dim + 1
  double fd_step = 1e-4;

  // F at the bundle coordinates w = (chart coords, fiber angle).
  Mat metric(const Vec& w) const;
  // σ(u) for tangent components u at any point (σ is constant here).
  double sigma(const Vec& u) const;
  // Γ^k as one dim × dim matrix per upper index.
  std::vector<Mat> christoffels(const Vec& w) const;
};

// Validates flatness; throws UnsupportedModelError otherwise.
FeffermanMetricData make_fefferman_data(
    std::shared_ptr<const ModelManifold> model);

// F at z applied to tangent components (u, v), sizes chart_dim + 1.
double fefferman_metric(const FeffermanMetricData& data, const CirclePoint& z,
                        const Vec& u, const Vec& v);
double fefferman_metric(std::shared_ptr<const ModelManifold> model,
                        const CirclePoint& z, const Vec& u, const Vec& v);

// ===========================================================================
// Lifts and geodesics
// ===========================================================================

// Lifts a characteristic-circle solution to the bundle by quadrature of
//   ṙ = ((n+2)/2) b(t),
// so ż = γ̇^↑ + ((n+2)/2) b Σ. Requires the recorded multiplier channel.
CircleCurve lift_sr_geodesic(const CurveSolution& sol, double r0);

// Fixed-step RK4 on the geodesic equations of F with finite-difference
// Christoffel symbols. F(ż, ż) is a first integral of the flow.
CircleCurve integrate_fefferman_geodesic(const FeffermanMetricData& data,
                                         const CirclePoint& z0, const Vec& dz0,
                                         double t_max, double h);

// Sup over samples of |∇_γ̇ γ̇ + 2 b J γ̇| for the projected base curve, with
// b = 2 σ(ż) read off the fiber velocity: measures how far the projection
// is from the characteristic-circle equation.
double projection_residual(const FeffermanMetricData& data,
                           const CircleCurve& curve, int samples = 200);

// Relative drift of F(ż, ż) along the curve.
double energy_drift(const FeffermanMetricData& data, const CircleCurve& curve,
                    int samples = 200);

// ===========================================================================
// Connection identities on the bundle
// ===========================================================================
//
// With Σ̂ = ((n+2)/2) Σ and X, Y horizontal, the Levi-Civita connection of F
// on a flat model satisfies
//
//   ∇^C_{X↑} Σ̂ = (JX)↑,   ∇^C_{Σ̂} Σ̂ = 0,   vert(∇^C_{X↑} Y↑) = 0,
//
// and σ is closed. The checker evaluates every identity with the
// finite-difference Christoffels at the given sample points.

struct LiftIdentityReport {
  double rotation_residual = 0.0;        // ∇_{X↑} Σ̂ vs (JX)↑
  double vertical_residual = 0.0;        // |∇_Σ̂ Σ̂|
  double mixed_vertical_residual = 0.0;  // fiber part of ∇_{X↑} Y↑
  double sigma_exactness = 0.0;          // FD exterior derivative of σ
  double sigma_reeb_gap = 0.0;           // |σ(Σ) − 1/(n+2)|
  bool lorentz_signature = true;         // (2n+1, 1) at every sample
  bool pass = false;
};

LiftIdentityReport lift_identity_check(const FeffermanMetricData& data,
                                       const std::vector<CirclePoint>& samples);

}  // namespace pseudoherm
