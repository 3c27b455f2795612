#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "pseudoherm/connection.hpp"
#include "pseudoherm/manifold.hpp"
#include "pseudoherm/models.hpp"

using namespace pseudoherm;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Tangent horizontal_sample(const ModelManifold& m, const ChartPoint& p,
                          std::uint64_t index) {
  Tangent u = sample_tangent(m, p, index);
  u.components = m.horizontal_part(p.coords, u.components);
  return u;
}

// Forwarding base for deliberately broken models used in the error-path
// tests below.
class ForwardingModel : public ModelManifold {
 public:
  explicit ForwardingModel(std::shared_ptr<const ModelManifold> inner)
      : inner_(std::move(inner)) {}

  int n() const override { return inner_->n(); }
  int chart_dim() const override { return inner_->chart_dim(); }
  Vec theta(const Vec& x) const override { return inner_->theta(x); }
  Mat dtheta_matrix(const Vec& x) const override {
    return inner_->dtheta_matrix(x);
  }
  Vec reeb(const Vec& x) const override { return inner_->reeb(x); }
  Mat j_coord(const Vec& x) const override { return inner_->j_coord(x); }
  std::shared_ptr<const FrameField> frame_field(const Vec& a) const override {
    return inner_->frame_field(a);
  }
  Vec levi_civita_cov(const Vec& x, const Vec& u, const Vec& V,
                      const Vec& dV_du) const override {
    return inner_->levi_civita_cov(x, u, V, dV_du);
  }

 protected:
  std::shared_ptr<const ModelManifold> inner_;
};

// Complex structure perturbed off the compatibility equations: the canonical
// connection's axioms cannot all hold, so construction must refuse.
class SkewedJModel final : public ForwardingModel {
 public:
  using ForwardingModel::ForwardingModel;
  std::string id() const override { return "skewed-j"; }
  Mat j_coord(const Vec& x) const override {
    Mat J = inner_->j_coord(x);
    J(0, 1) += 0.05;
    return J;
  }
};

// Orientation-reversed complex structure: the Levi form comes out negative
// definite, which the frame Gram check must flag as a degenerate metric.
class FlippedJModel final : public ForwardingModel {
 public:
  using ForwardingModel::ForwardingModel;
  std::string id() const override { return "flipped-j"; }
  Mat j_coord(const Vec& x) const override { return -inner_->j_coord(x); }
};

// Evaluators fail beyond a small radius of the anchor, so the curvature
// finite-difference stencil cannot be completed.
class NarrowDomainModel final : public ForwardingModel {
 public:
  NarrowDomainModel(std::shared_ptr<const ModelManifold> inner, Vec anchor)
      : ForwardingModel(std::move(inner)), anchor_(std::move(anchor)) {}
  std::string id() const override { return "narrow-domain"; }
  Vec theta(const Vec& x) const override {
    if ((x - anchor_).cwiseAbs().maxCoeff() > 4.5e-4)
      throw std::runtime_error("synthetic evaluation failure");
    return inner_->theta(x);
  }

 private:
  Vec anchor_;
};

}  // namespace

// ===========================================================================
// Uniqueness: construction vs least-squares structure-equation solve
// ===========================================================================

TEST_CASE("connection coefficients match the least-squares axiom oracle") {
  struct Family {
    std::shared_ptr<const ModelManifold> model;
    double lsq_tol;
  };
  const Family families[] = {
      {heisenberg(1), 1e-9},
      {heisenberg(2), 1e-9},
      {sphere(1), 1e-9},
      {scaled_heisenberg(1, 0.1), 1e-6},
  };
  for (const Family& f : families) {
    CAPTURE(f.model->id());
    for (const ChartPoint& p : sample_points(*f.model, 5, 31u)) {
      auto section = f.model->frame_field(p.coords);
      const ConnectionData conn = tw_connection(*f.model, *section, p);
      const oracles::AxiomSolve solve =
          oracles::solve_axioms(*f.model, *section, p.coords);

      CHECK(solve.lsq_residual < f.lsq_tol);
      double gdiff = 0.0;
      for (int a = 0; a < f.model->dim(); ++a)
        gdiff = std::max(
            gdiff, (conn.gamma[a] - solve.gamma[a]).cwiseAbs().maxCoeff());
      CHECK(gdiff < 1e-7);
      CHECK((conn.tau_matrix - solve.a_frame).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("axiom residuals stay within the per-model tolerance") {
  for (auto m : {heisenberg(1), heisenberg(2), sphere(1), sphere(2),
                 scaled_heisenberg(1, 0.1)}) {
    CAPTURE(m->id());
    for (const ChartPoint& p : sample_points(*m, 5, 37u)) {
      const ConnectionData conn = tw_connection(*m, p);
      for (const auto& [name, value] : conn.axiom_residuals) {
        CAPTURE(name);
        CHECK(value < m->axiom_tolerance());
      }
      CHECK(conn.worst_axiom_residual() < m->axiom_tolerance());
      CHECK(conn.axiom_residuals.count("torsion_purity") == 1);
      CHECK(conn.axiom_residuals.count("tau_j_anticommute") == 1);
    }
  }
}

TEST_CASE("Riemannian reference connection is metric and torsion free") {
  for (auto m : {heisenberg(1), sphere(1), scaled_heisenberg(1, 0.1)}) {
    CAPTURE(m->id());
    const double tol = m->axiom_tolerance();
    for (const ChartPoint& p : sample_points(*m, 5, 41u)) {
      const ConnectionData lc = levi_civita(*m, p);
      CHECK(lc.axiom_residuals.at("metric_compatibility") < tol);
      CHECK(lc.axiom_residuals.at("torsion_free") < tol);
      CHECK(lc.tau_matrix.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

// ===========================================================================
// Curvature operator
// ===========================================================================

TEST_CASE("curvature is exactly antisymmetric in the differentiating slots") {
  auto m = sphere(1);
  for (const ChartPoint& p : sample_points(*m, 3, 43u)) {
    const Tangent u = sample_tangent(*m, p, 0);
    const Tangent w = sample_tangent(*m, p, 1);
    CHECK(curvature(*m, p, u, u, w).components.cwiseAbs().maxCoeff() == 0.0);

    const Tangent v = sample_tangent(*m, p, 2);
    const Vec forward = curvature(*m, p, u, v, w).components;
    const Vec reversed = curvature(*m, p, v, u, w).components;
    CHECK((forward + reversed).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sphere curvature matches the closed-form operator") {
  for (int n : {1, 2}) {
    auto m = sphere(n);
    CAPTURE(n);
    for (const ChartPoint& p : sample_points(*m, 4, 47u)) {
      for (std::uint64_t k = 0; k < 4; ++k) {
        const Tangent u = sample_tangent(*m, p, 3 * k);
        const Tangent v = sample_tangent(*m, p, 3 * k + 1);
        const Tangent w = sample_tangent(*m, p, 3 * k + 2);
        const Vec computed = curvature(*m, p, u, v, w).components;
        const Vec closed = oracles::sphere_curvature_closed_form(
            *m, p.coords, u.components, v.components, w.components);
        CHECK((computed - closed).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
}

TEST_CASE("curvature vanishes on the Reeb direction for spheres") {
  auto m = sphere(1);
  for (const ChartPoint& p : sample_points(*m, 4, 53u)) {
    const Tangent T = m->make_tangent(p.coords, m->reeb(p.coords));
    const Tangent u = horizontal_sample(*m, p, 5u);
    CHECK(curvature(*m, p, T, u, u).components.cwiseAbs().maxCoeff() < 1e-6);
  }
}

// ===========================================================================
// Sectional curvature
// ===========================================================================

TEST_CASE("sectional curvature is a function of the plane only") {
  auto m = sphere(2);
  std::mt19937_64 rng(99u);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (const ChartPoint& p : sample_points(*m, 3, 59u)) {
    const Tangent u = horizontal_sample(*m, p, 0);
    const Tangent v = horizontal_sample(*m, p, 1);
    const double k = sectional(*m, p, u, v);

    CHECK(sectional(*m, p, v, u) == doctest::Approx(k).epsilon(1e-12));

    for (int trial = 0; trial < 5; ++trial) {
      double a = coef(rng), b = coef(rng), c = coef(rng), d = coef(rng);
      if (std::abs(a * d - b * c) < 0.1) continue;
      const Tangent u2 = m->make_tangent(
          p.coords, a * u.components + b * v.components);
      const Tangent v2 = m->make_tangent(
          p.coords, c * u.components + d * v.components);
      CHECK(sectional(*m, p, u2, v2) == doctest::Approx(k).epsilon(1e-9));
    }
  }
}

TEST_CASE("sectional curvature of the sphere separates plane types") {
  auto m = sphere(2);
  for (const ChartPoint& p : sample_points(*m, 3, 61u)) {
    const AdaptedFrame fr = m->adapted_frame(p.coords);
    const Tangent& e0 = fr.horizontal[0];
    const Tangent& je0 = fr.horizontal[1];
    const Tangent& e2 = fr.horizontal[2];
    CHECK(sectional(*m, p, e0, je0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sectional(*m, p, e0, e2) == doctest::Approx(0.25).epsilon(1e-6));
  }
}

TEST_CASE("degenerate planes are rejected") {
  auto m = heisenberg(1);
  const ChartPoint p = m->make_point(vec3(0.2, 0.4, -0.1));
  const Tangent u = m->make_tangent(p.coords, vec3(1, 0, 0.4));
  const Tangent v = m->make_tangent(p.coords, 2.0 * u.components);
  CHECK_THROWS_AS(sectional(*m, p, u, v), DegeneratePlaneError);
  const Tangent zero = m->make_tangent(p.coords, Vec::Zero(3));
  CHECK_THROWS_AS(sectional(*m, p, zero, u), DegeneratePlaneError);
}

// ===========================================================================
// Ricci form
// ===========================================================================

TEST_CASE("ricci scales quadratically and rejects non-horizontal input") {
  auto m = sphere(1);
  for (const ChartPoint& p : sample_points(*m, 3, 67u)) {
    const Tangent u = horizontal_sample(*m, p, 2u);
    const Tangent u2 = m->make_tangent(p.coords, 2.0 * u.components);
    CHECK(ricci(*m, p, u2) ==
          doctest::Approx(4.0 * ricci(*m, p, u)).epsilon(1e-9));

    const Tangent T = m->make_tangent(p.coords, m->reeb(p.coords));
    CHECK_THROWS_AS(ricci(*m, p, T), std::domain_error);
  }
}

TEST_CASE("sphere ricci values agree with sectional traces") {
  // On S³ the contact planes are two dimensional, so for unit horizontal u
  // the trace reduces to a single holomorphic plane term:
  //   Ric(u,u) = 4 k(u, Ju) g(u,u).
  auto s3 = sphere(1);
  for (const ChartPoint& p : sample_points(*s3, 4, 71u)) {
    const Tangent u = horizontal_sample(*s3, p, 4u);
    const Tangent ju = s3->make_tangent(p.coords,
                                        s3->j_coord(p.coords) * u.components);
    const double norm2 = webster_metric(*s3, p, u, u);
    const double expected = 4.0 * sectional(*s3, p, u, ju) * norm2;
    CHECK(ricci(*s3, p, u) == doctest::Approx(expected).epsilon(1e-6));
  }

  // Unit-vector values 2n + 2.
  for (int n : {1, 2}) {
    auto m = sphere(n);
    const ChartPoint p = sample_points(*m, 1, 73u)[0];
    const AdaptedFrame fr = m->adapted_frame(p.coords);
    CHECK(ricci(*m, p, fr.horizontal[0]) ==
          doctest::Approx(2.0 * n + 2.0).epsilon(1e-6));
  }
}

// ===========================================================================
// Torsion derivative
// ===========================================================================

TEST_CASE("S vanishes on torsion-free models") {
  for (auto m : {heisenberg(1), sphere(1)}) {
    CAPTURE(m->id());
    for (const ChartPoint& p : sample_points(*m, 3, 79u)) {
      auto section = m->frame_field(p.coords);
      const Tangent X = horizontal_sample(*m, p, 0);
      const Tangent Y = horizontal_sample(*m, p, 1);
      const Vec s =
          torsion_derivative_s(*m, *section, p, X.components, Y.components);
      CHECK(s.cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

// ===========================================================================
// Identity suite
// ===========================================================================

TEST_CASE("curvature identity suite passes on every model family") {
  for (auto m : {heisenberg(1), heisenberg(2), sphere(1), sphere(2),
                 scaled_heisenberg(1, 0.1)}) {
    CAPTURE(m->id());
    const ResidualReport report =
        identity_suite(*m, sample_points(*m, 3, 83u), 4);
    CHECK(report.all_pass());
    CHECK(report.worst("first_bianchi_horizontal") < 1e-6);
    if (!report.all_pass())
      for (const std::string& name : report.failing_names()) MESSAGE(name);
  }
}

TEST_CASE("identity suite reports the Sasakian specializations") {
  auto s3 = sphere(1);
  const ResidualReport report =
      identity_suite(*s3, sample_points(*s3, 2, 89u), 3);
  CHECK(report.worst("sasakian_s_vanishes") < 1e-6);
  CHECK(report.worst("sasakian_pair_symmetry") < 1e-6);

  auto heis = heisenberg(1);
  const ResidualReport flat_report =
      identity_suite(*heis, sample_points(*heis, 2, 97u), 3);
  CHECK(flat_report.worst("sasakian_space_form_c_minus_3") < 1e-6);
  CHECK(flat_report.worst("flat_constant_curvature_form") < 1e-8);
}

// ===========================================================================
// Error paths
// ===========================================================================

TEST_CASE("incompatible complex structure is refused") {
  auto broken = std::make_shared<SkewedJModel>(heisenberg(1));
  const ChartPoint p = broken->make_point(vec3(0.1, -0.3, 0.2));
  CHECK_THROWS_AS(tw_connection(*broken, p), InconsistentModelError);
}

TEST_CASE("negative Levi form is reported as a degenerate metric") {
  auto broken = std::make_shared<FlippedJModel>(heisenberg(1));
  const ChartPoint p = broken->make_point(vec3(0.1, -0.3, 0.2));
  CHECK_THROWS_AS(tw_connection(*broken, p), DegenerateMetricError);
}

TEST_CASE("curvature stencil failures carry the failing location") {
  const Vec anchor = Vec::Zero(3);
  auto narrow = std::make_shared<NarrowDomainModel>(heisenberg(1), anchor);
  const ChartPoint p = narrow->make_point(anchor);
  const Tangent u = narrow->make_tangent(anchor, vec3(1, 0, 0));
  const Tangent v = narrow->make_tangent(anchor, vec3(0, 1, 0));
  try {
    curvature(*narrow, p, u, v, u);
    FAIL("expected a numeric error from the truncated stencil");
  } catch (const NumericError& e) {
    const std::string what = e.what();
    CHECK(what.find("narrow-domain") != std::string::npos);
    CHECK(what.find("coordinate") != std::string::npos);
  }
}
