#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "pseudoherm/geodesics.hpp"
#include "pseudoherm/jacobi.hpp"

namespace pseudoherm {

// ===========================================================================
// Broken curves
// ===========================================================================

// A chain of integrated curve segments glued end to start. Segment k covers
// [offsets[k], offsets[k] + (segment span)] on the global parameter axis;
// junctions agree in position but may kink in velocity. All segments share
// one parametrization speed r.
struct BrokenCurve {
  std::vector<CurveSolution> segments;
  std::vector<double> offsets;

  double t0() const;
  double t1() const;
  // Common parametrization speed r = |γ̇|.
  double speed() const;
  // Interior junction parameters, in increasing order.
  std::vector<double> corners() const;
  // Index of the segment containing t; at a junction prefer_left selects the
  // incoming segment.
  int segment_at(double t, bool prefer_left = true) const;
  Vec position(double t) const;
  Vec velocity(double t, bool prefer_left = true) const;
  Vec acceleration(double t, bool prefer_left = true) const;
};

// Glues segments into a BrokenCurve, validating junction continuity
// (position gap below 1e−8) and a common speed (relative drift below 1e−6).
BrokenCurve chain(std::vector<CurveSolution> segments);

// ===========================================================================
// Variation fields in chart components
// ===========================================================================

// A vector field along a curve: global parameter ↦ chart components of a
// tangent vector at the curve point.
using ChartField = std::function<Vec(double)>;

// Chart-component evaluator X(t) = E(t) u(t) of a parallel-frame field,
// with the frame interpolated through the workspace's half-grid transport
// (cubic, fourth-order accurate). Valid on the field's own domain.
ChartField chart_field(const JacobiWorkspace& ws, const CurveField& x);

// ===========================================================================
// One-parameter families of curves
// ===========================================================================
//
// γ^s(t) is the point reached from γ(t) after flowing for parameter s along
// the canonical-connection geodesic with initial velocity X_{γ(t)}. The
// family satisfies γ⁰ = γ, fixes every point where X vanishes, and has
// s-derivative X at s = 0, so it computes first and second variations of
// the Webster length by finite differences.

// One quadrature node of the length functional: the node parameter, its
// finite-difference stencil row, and the flow curves at the five stencil
// offsets (forward and backward in s). A frozen offset marks a vanishing
// field value, where the family holds the point fixed.
struct FamilyStencil {
  double t = 0.0;
  double weight = 0.0;  // composite Simpson weight, including the step
  int row = 0;
  double delta = 0.0;
  std::array<Vec, 5> base_points;
  std::array<bool, 5> frozen{};
  std::array<CurveSolution, 5> forward;
  std::array<CurveSolution, 5> backward;
};

struct CurveFamily {
  std::shared_ptr<const ModelManifold> model;
  BrokenCurve base;
  ChartField x;
  std::vector<double> x_corners;  // parameters where X is only C⁰
  double lo = 0.0, hi = 0.0;      // parameter window under variation
  double eps = 0.0;               // family radius: |s| < eps
  int exp_steps = 8;              // RK4 steps per exponential flow
  std::vector<FamilyStencil> stencils;

  // γ^s(t), evaluated on demand.
  ChartPoint at(double t, double s) const;
  // Webster length of γ^s over [lo, hi], from the cached stencils.
  double length(double s) const;
};

// Builds a family over the window [lo, hi] (defaults: the base domain) and
// precomputes the flow curves behind length(). x_corners lists parameters
// where X kinks, so the quadrature splits there.
CurveFamily make_family(std::shared_ptr<const ModelManifold> model,
                        BrokenCurve base, ChartField x, double eps,
                        std::vector<double> x_corners = {});

// Convenience route from the deviation-field toolkit: the window is the
// field's domain and corners are read off the field.
CurveFamily make_family(const JacobiWorkspace& ws, const CurveField& x,
                        double eps);

// ===========================================================================
// First variation
// ===========================================================================
//
// For a family of curves parametrized proportionally to arc length,
//
//   dL/ds|₀ = (1/r) { [g(X, γ̇)]ₐᵇ + Σⱼ g(X(cⱼ), γ̇(cⱼ⁻) − γ̇(cⱼ⁺))
//             − ∫ₐᵇ [ g(X, ∇_γ̇ γ̇) − g(T_∇(X, γ̇), γ̇) ] dt },
//
// with the corner sum over the curve's junctions inside (a, b).

// General route: any chained curve, field given in chart components;
// breaks lists parameters where X is only C⁰ (quadrature split points).
double first_variation_formula(const BrokenCurve& curve, const ChartField& x,
                               double a, double b,
                               const std::vector<double>& breaks = {});

// Workspace route: unit-speed geodesic base, field in parallel-frame
// components. The integrand collapses to the torsion pairing θ(X) A(γ̇, γ̇).
double first_variation_formula(const JacobiWorkspace& ws, const CurveField& x,
                               double a, double b);

// Central difference of L(γ^s) at s = 0 with step 1e−4, one Richardson
// level. Requires eps ≥ 1e−4.
double first_variation_fd(const CurveFamily& family);

// Second central difference of L(γ^s) at s = 0 with step 1e−3, one
// Richardson level. Requires eps ≥ 1e−3 and a lengthy base.
double second_variation_fd(const CurveFamily& family);

// ===========================================================================
// Nonminimality demonstration
// ===========================================================================

// Wires a negative-index broken field into a family and exhibits a curve of
// the family strictly shorter than the geodesic arc.
struct NonminimalityReport {
  BrokenIndexField broken;
  double first_variation = 0.0;   // FD dL/ds at s = 0
  double second_variation = 0.0;  // FD d²L/ds² at s = 0
  double base_length = 0.0;       // L(γ) over [a, b]
  double s_star = 0.0;            // parameter of the improved curve
  double improved_length = 0.0;   // L(γ^{s*})
};

NonminimalityReport nonminimality_demo(const CurveSolution& sol, double a,
                                       double c, double b, double delta);
NonminimalityReport nonminimality_demo(const JacobiWorkspace& ws, double a,
                                       double c, double b, double delta);

}  // namespace pseudoherm
