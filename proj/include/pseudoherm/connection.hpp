#pragma once

#include <map>
#include <string>
#include <vector>

#include "pseudoherm/manifold.hpp"
#include "pseudoherm/report.hpp"
#include "pseudoherm/types.hpp"

namespace pseudoherm {

// ===========================================================================
// Connection coefficients in an adapted frame
// ===========================================================================
//
// gamma[a](b, c) = g(∇_{e_a} e_b, e_c) in the g-orthonormal adapted frame
// {e_0, ..., e_{2n−1}, T}, with the Reeb vector in slot 2n. tau_matrix holds
// the torsion components A(e_a, e_b) = g(τ e_a, e_b) on the horizontal frame
// (2n × 2n; τ T = 0 always).

struct ConnectionData {
  ChartPoint base;
  AdaptedFrame frame;
  std::vector<Mat> gamma;
  Mat tau_matrix;
  std::map<std::string, double> axiom_residuals;

  double worst_axiom_residual() const;
};

// Levi-Civita connection of the Webster metric via the Koszul formula in the
// orthonormal adapted frame. Residuals: metric compatibility and vanishing
// torsion. Throws DegenerateMetricError when the frame Gram matrix is
// numerically singular.
ConnectionData levi_civita(const ModelManifold& model, const FrameField& section,
                           const ChartPoint& x);
ConnectionData levi_civita(const ModelManifold& model, const ChartPoint& x);

// Tanaka-Webster connection. Extracts the torsion components
// A(X, Y) = Ω(X, Y) − g(D_X Y, T) on horizontal pairs, then inverts
//
//   D = ∇ + (Ω − A) ⊗ T + τ ⊗ θ + 2 θ ⊙ J
//
// to obtain ∇. Residuals: ∇g, ∇J, ∇θ, ∇T, torsion purity, the torsion
// orientation T_∇(T, X) = τX, symmetry of A, and τJ + Jτ = 0. Throws
// InconsistentModelError when any residual exceeds 10× the model's axiom
// tolerance (a convention bug, not ordinary numerical noise).
ConnectionData tw_connection(const ModelManifold& model, const FrameField& section,
                             const ChartPoint& x);
ConnectionData tw_connection(const ModelManifold& model, const ChartPoint& x);

// ===========================================================================
// Coordinate-level covariant derivative
// ===========================================================================
//
// Pointwise tensors caching everything needed to evaluate the Tanaka-Webster
// covariant derivative of a field V along a direction u purely in chart
// components:
//
//   ∇_u V = D_u V − (Ω(u,V) − A(u,V)) T − θ(V) τ(u_H) − θ(u) J V − θ(V) J u.
//
// The expression is tensorial, so curve integrators may evaluate it with
// whichever frame section is convenient near each point.

struct TwPointData {
  ChartPoint base;
  Vec theta;       // contact form components
  Vec reeb;        // Reeb components
  Mat j;           // chart-level J
  Mat g;           // chart-level Webster metric
  Mat horizontal;  // chart_dim × 2n matrix of frame columns
  Mat a_frame;     // 2n × 2n torsion components in the frame
  Mat tau_coord;   // chart-level operator: tau_coord · u = τ(u_H)

  // g-orthonormal frame components of the horizontal part of u.
  Vec frame_components(const Vec& u) const;
  double omega(const Vec& u, const Vec& v) const;
  double a(const Vec& u, const Vec& v) const;
};

TwPointData tw_point_data(const ModelManifold& model, const FrameField& section,
                          const ChartPoint& x);

Vec tw_cov(const ModelManifold& model, const TwPointData& data, const Vec& u,
           const Vec& V, const Vec& dV_du);

// (∇_u τ) v: covariant derivative of the torsion tensor, by differentiating
// the chart-level torsion field along u with central differences at the
// model's FD step scale.
Vec tw_cov_tau(const ModelManifold& model, const FrameField& section,
               const ChartPoint& x, const Vec& u, const Vec& v);

// S(X, Y) = (∇_X τ)Y − (∇_Y τ)X evaluated on the horizontal parts of the
// inputs, in chart components.
Vec torsion_derivative_s(const ModelManifold& model, const FrameField& section,
                         const ChartPoint& x, const Vec& X, const Vec& Y);

// ===========================================================================
// Curvature
// ===========================================================================
//
// ops[i ⋅ dim + j](l, k) holds the frame components of R(e_i, e_j) e_k,
// assembled from the frame formula
//
//   R^f_{cab} = e_a(Γ^f_{bc}) − e_b(Γ^f_{ac})
//             + Γ^d_{bc} Γ^f_{ad} − Γ^d_{ac} Γ^f_{bd} − c^d_{ab} Γ^f_{dc},
//
// with the coefficient derivatives taken by Richardson-extrapolated central
// differences of the connection over a single smooth frame section.

struct CurvatureSample {
  ChartPoint base;
  AdaptedFrame frame;
  int dim = 0;
  std::vector<Mat> ops;

  // Derived values: sectional curvature of the frame coordinate planes and
  // the Ricci form on the horizontal frame.
  Mat sectional_pairs;
  Mat ricci_h;

  const Mat& op(int i, int j) const;
  // Frame components of R(u, v) w for frame-component inputs. Antisymmetric
  // in (u, v) exactly: the pair (i, j) and (j, i) contributions cancel by
  // construction.
  Vec apply(const Vec& u_f, const Vec& v_f, const Vec& w_f) const;
  // The 4-tensor R(X, Y, Z, W) = g(R(Z, W) Y, X) on frame components.
  double four_tensor(const Vec& x_f, const Vec& y_f, const Vec& z_f,
                     const Vec& w_f) const;
};

CurvatureSample curvature_sample(const ModelManifold& model,
                                 const FrameField& section, const ChartPoint& x);
CurvatureSample curvature_sample(const ModelManifold& model, const ChartPoint& x);

// Curvature of the Levi-Civita connection of g_θ, through the same frame
// machinery.
CurvatureSample levi_civita_curvature_sample(const ModelManifold& model,
                                             const FrameField& section,
                                             const ChartPoint& x);

// R(u, v) w as a chart-level tangent vector.
Tangent curvature(const ModelManifold& model, const ChartPoint& x,
                  const Tangent& u, const Tangent& v, const Tangent& w);

// Pseudohermitian sectional curvature k_θ(span{u, v}) = (1/4) g(R(X,Y)Y, X)
// for an orthonormal basis {X, Y} produced by Gram-Schmidt. Throws
// DegeneratePlaneError on linearly dependent inputs.
double sectional(const ModelManifold& model, const ChartPoint& x,
                 const Tangent& u, const Tangent& v);
double sectional(const CurvatureSample& sample, const Vec& u_f, const Vec& v_f);

// Ricci curvature ρ(u, u) = Σ_i g(R(E_i, u) u, E_i) over an orthonormal
// horizontal frame; u must be horizontal (domain error otherwise).
double ricci(const ModelManifold& model, const ChartPoint& x, const Tangent& u);
double ricci(const CurvatureSample& sample, const Vec& u_f);

// ===========================================================================
// Identity suite
// ===========================================================================
//
// Runs the curvature identity battery at each sample point with `trials`
// deterministic random vector tuples per point: the first Bianchi identity
// on horizontal triples, the Reeb-slot identity R(X,T)Y + R(T,Y)X = S(X,Y),
// both 4-tensor antisymmetries, pair interchange with torsion corrections,
// the Levi-Civita/Tanaka-Webster curvature relation, and on the flat group
// models the constant-φ-sectional-curvature form of R^D (c = −3) and the
// constant-k curvature form (both sides of which vanish). Failures are
// reported, never thrown.
ResidualReport identity_suite(const ModelManifold& model,
                              const std::vector<ChartPoint>& sample_points,
                              int trials);

}  // namespace pseudoherm
