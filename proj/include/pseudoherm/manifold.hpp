#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pseudoherm/types.hpp"

namespace pseudoherm {

// An orthonormal adapted frame at a point: 2n horizontal vectors spanning the
// contact distribution H, paired so that e_{2k+1} = J e_{2k}, plus the Reeb
// vector. j_matrix and g_matrix express J and the Levi form in this frame.
struct AdaptedFrame {
  ChartPoint base;
  std::vector<Tangent> horizontal;
  Tangent reeb;
  Mat j_matrix;
  Mat g_matrix;
};

// Frame data with first coordinate derivatives, for bracket and Koszul
// computations. horizontal has one column per frame vector;
// d_horizontal[a](i, j) = ∂_j e_a^i and d_reeb(i, j) = ∂_j T^i.
struct FrameJet {
  Mat horizontal;
  Vec reeb;
  std::vector<Mat> d_horizontal;
  Mat d_reeb;
};

// A smooth local section of adapted frames, valid in a neighborhood of the
// anchor point it was built at. Group models return a global section; the
// sphere fixes its pivot choices at the anchor so that nearby evaluations
// vary smoothly (required whenever frames are differentiated or compared
// across a finite-difference stencil).
class FrameField {
 public:
  virtual ~FrameField() = default;
  virtual Mat horizontal(const Vec& x) const = 0;
  virtual Vec reeb(const Vec& x) const = 0;
  virtual FrameJet jet(const Vec& x) const = 0;
};

// A chartable strictly pseudoconvex CR model: contact form, complex
// structure, Reeb field, Webster metric, and adapted frames with derivative
// data. All evaluators are pure; instances are immutable and freely shared.
class ModelManifold {
 public:
  virtual ~ModelManifold() = default;

  virtual std::string id() const = 0;
  virtual int n() const = 0;
  int dim() const { return 2 * n() + 1; }
  int h_dim() const { return 2 * n(); }
  // Length of coordinate arrays: dim for group models, 2n+2 ambient for the
  // sphere.
  virtual int chart_dim() const { return dim(); }

  // Contact form components θ_i(x).
  virtual Vec theta(const Vec& x) const = 0;
  // Exterior derivative matrix D(i,j) = ∂_i θ_j − ∂_j θ_i, so that
  // dθ(u,v) = uᵀ D v.
  virtual Mat dtheta_matrix(const Vec& x) const = 0;
  // Reeb components T^i(x): θ(T) = 1, T ⨼ dθ = 0.
  virtual Vec reeb(const Vec& x) const = 0;
  // J extended to the whole tangent space by JT = 0, as a chart-level
  // matrix acting on coordinate components.
  virtual Mat j_coord(const Vec& x) const = 0;
  // Webster metric as a chart-level matrix. Default assembles
  // (1/2) dθ(·, J·) + θ ⊗ θ; the sphere's ambient matrix is rank 2n+1.
  virtual Mat metric_matrix(const Vec& x) const;

  // Smooth frame section anchored at the given point.
  virtual std::shared_ptr<const FrameField> frame_field(
      const Vec& anchor) const = 0;

  // Levi-Civita covariant derivative D_u V in chart components, given the
  // already-applied directional derivative dV_du = u^i ∂_i V.
  virtual Vec levi_civita_cov(const Vec& x, const Vec& u, const Vec& V,
                              const Vec& dV_du) const = 0;

  // Pull a drifted point back onto the model (sphere renormalizes; group
  // models are already global charts).
  virtual Vec project(const Vec& x) const { return x; }
  // Remove components not tangent to the model at x (sphere: radial part).
  virtual Vec tangentialize(const Vec& x, const Vec& u) const { return u; }

  // True for the Tanaka-Webster-flat group models (Heisenberg with κ = 0
  // scaling included); gates the circle-bundle construction.
  virtual bool flat_group() const { return false; }

  // Tolerance for connection axiom residuals: tighter when every tensor has
  // a closed form, looser when the model's derivative data is itself a
  // finite-difference approximation.
  virtual double axiom_tolerance() const { return 1e-8; }

  // Step scale for finite differences of connection coefficients. Models
  // with noisy (FD-based) coefficients need a larger step so the noise is
  // not amplified by the divided difference.
  virtual double fd_step_scale() const { return 1e-3; }

  ChartPoint make_point(const Vec& coords) const;
  Tangent make_tangent(const Vec& coords, const Vec& components) const;

  // Horizontal part u − θ(u)T (minus the radial part on the sphere).
  Vec horizontal_part(const Vec& x, const Vec& u) const;

  AdaptedFrame adapted_frame(const Vec& x) const;
};

// ---------------------------------------------------------------------------
// Pseudohermitian primitives
// ---------------------------------------------------------------------------

// dθ(u,v) = u(θ(v)) − v(θ(u)) − θ([u,v]) for constant-component extensions;
// no 1/2 factor.
double dtheta(const ModelManifold& model, const ChartPoint& x,
              const Tangent& u, const Tangent& v);

// Ω(u,v) = g_θ(u, Jv) with JT = 0. Equals −(1/2) dθ on H × H.
double omega(const ModelManifold& model, const ChartPoint& x,
             const Tangent& u, const Tangent& v);

// The Webster metric g_θ(u,v).
double webster_metric(const ModelManifold& model, const ChartPoint& x,
                      const Tangent& u, const Tangent& v);

// Max-norm residual between the contact cometric assembled from the frame
// (Σ_a e_a e_aᵀ) and the inverse-metric expression g⁻¹ − T ⊗ T. The sphere
// uses the tangential pseudoinverse.
double metric_duality_residual(const ModelManifold& model,
                               const ChartPoint& x);

// ---------------------------------------------------------------------------
// Frame validation
// ---------------------------------------------------------------------------

// Named residuals for the adapted-frame invariants: horizontality of the
// frame, Reeb normalization, J² = −I, metric compatibility of J, Levi-form
// positivity (reported as min eigenvalue, checked > 0).
std::map<std::string, double> adapted_frame_residuals(
    const ModelManifold& model, const AdaptedFrame& frame);

// Cross-check of the frame jet's derivatives against central finite
// differences of the frame values (step 1e−5, scaled per coordinate);
// returns the max residual.
double frame_jet_fd_residual(const ModelManifold& model, const Vec& x);

// ---------------------------------------------------------------------------
// Deterministic sampling
// ---------------------------------------------------------------------------

// Quasi-random sample points in |coords| ≤ 2 (sphere points are normalized
// to the unit sphere).
std::vector<ChartPoint> sample_points(const ModelManifold& model, int count,
                                      std::uint64_t seed);

// Deterministic tangent vectors at x (index selects the sequence element);
// sphere vectors are tangentialized.
Tangent sample_tangent(const ModelManifold& model, const ChartPoint& x,
                       std::uint64_t index);

}  // namespace pseudoherm
