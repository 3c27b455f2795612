#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pseudoherm/manifold.hpp"
#include "pseudoherm/models.hpp"

using namespace pseudoherm;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace

// ===========================================================================
// Contact form and exterior derivative conventions
// ===========================================================================

TEST_CASE("exterior derivative convention on the Heisenberg group") {
  auto m = heisenberg(1);
  const ChartPoint p = m->make_point(vec3(0.7, -0.4, 1.3));

  // X = ∂x + y∂t, Y = ∂y − x∂t span the contact planes.
  const Tangent X = m->make_tangent(p.coords, vec3(1, 0, -0.4));
  const Tangent Y = m->make_tangent(p.coords, vec3(0, 1, -0.7));
  const Tangent T = m->make_tangent(p.coords, m->reeb(p.coords));

  CHECK(m->theta(p.coords).dot(X.components) == doctest::Approx(0).epsilon(1e-14));
  CHECK(m->theta(p.coords).dot(T.components) == doctest::Approx(1).epsilon(1e-14));

  CHECK(dtheta(*m, p, X, Y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(dtheta(*m, p, X, X) == doctest::Approx(0.0));
  CHECK(dtheta(*m, p, Y, X) == doctest::Approx(-2.0).epsilon(1e-12));

  // The Reeb field generates the kernel of dθ.
  CHECK(std::abs(dtheta(*m, p, T, X)) < 1e-12);
  CHECK(std::abs(dtheta(*m, p, T, Y)) < 1e-12);
}

TEST_CASE("Levi form, J compatibility, and the Webster metric") {
  for (auto m : {heisenberg(1), sphere(1), scaled_heisenberg(1, 0.1)}) {
    CAPTURE(m->id());
    for (const ChartPoint& p : sample_points(*m, 5, 11u)) {
      const AdaptedFrame fr = m->adapted_frame(p.coords);
      const Tangent& e1 = fr.horizontal[0];
      const Tangent& e2 = fr.horizontal[1];

      // Orthonormality and the adapted pairing e2 = J e1.
      const int h = m->h_dim();
      CHECK((fr.g_matrix - Mat::Identity(h, h)).cwiseAbs().maxCoeff() < 1e-9);
      const Vec je1 = m->j_coord(p.coords) * e1.components;
      CHECK((je1 - e2.components).cwiseAbs().maxCoeff() < 1e-9);

      // Ω(u,u) = 0, Ω(T,·) = 0, and the oriented value on an adapted pair.
      CHECK(std::abs(omega(*m, p, e1, e1)) < 1e-12);
      CHECK(std::abs(omega(*m, p, fr.reeb, e1)) < 1e-12);
      CHECK(omega(*m, p, e1, e2) == doctest::Approx(-1.0).epsilon(1e-9));

      // g(T,T) = 1, g(T,X) = 0.
      CHECK(webster_metric(*m, p, fr.reeb, fr.reeb) ==
            doctest::Approx(1.0).epsilon(1e-10));
      CHECK(std::abs(webster_metric(*m, p, fr.reeb, e1)) < 1e-10);
      CHECK(std::abs(webster_metric(*m, p, fr.reeb, e2)) < 1e-10);

      // Ω = −(1/2) dθ on H × H, and dθ(u, Jv) is symmetric.
      for (std::uint64_t k = 0; k < 3; ++k) {
        Tangent u = sample_tangent(*m, p, 2 * k);
        Tangent v = sample_tangent(*m, p, 2 * k + 1);
        u.components = m->horizontal_part(p.coords, u.components);
        v.components = m->horizontal_part(p.coords, v.components);
        CHECK(omega(*m, p, u, v) ==
              doctest::Approx(-0.5 * dtheta(*m, p, u, v)).epsilon(1e-9));

        const Mat J = m->j_coord(p.coords);
        const Tangent ju = m->make_tangent(p.coords, J * u.components);
        const Tangent jv = m->make_tangent(p.coords, J * v.components);
        CHECK(std::abs(dtheta(*m, p, u, jv) - dtheta(*m, p, v, ju)) < 1e-10);
      }
    }
  }
}

// ===========================================================================
// Metric duality: contact cometric vs inverse metric
// ===========================================================================

TEST_CASE("contact cometric matches the inverse-metric expression") {
  auto heis = heisenberg(1);
  CHECK(metric_duality_residual(*heis, heis->make_point(vec3(0, 0, 0))) <
        1e-10);
  CHECK(metric_duality_residual(
            *heis, heis->make_point(vec3(0.9, -1.4, 0.6))) < 1e-10);

  auto s3 = sphere(1);
  Vec pole = Vec::Zero(4);
  pole[0] = 1.0;
  CHECK(metric_duality_residual(*s3, s3->make_point(pole)) < 1e-8);
  for (const ChartPoint& p : sample_points(*s3, 5, 3u))
    CHECK(metric_duality_residual(*s3, p) < 1e-8);
}

TEST_CASE("contact cometric annihilates the contact form") {
  for (auto m : {heisenberg(1), heisenberg(2), sphere(1),
                 scaled_heisenberg(1, 0.1)}) {
    CAPTURE(m->id());
    for (const ChartPoint& p : sample_points(*m, 10, 5u)) {
      const AdaptedFrame fr = m->adapted_frame(p.coords);
      Mat cometric = Mat::Zero(m->chart_dim(), m->chart_dim());
      for (const Tangent& e : fr.horizontal)
        cometric += e.components * e.components.transpose();
      CHECK((cometric * m->theta(p.coords)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

// ===========================================================================
// Frame invariants and derivative cross-checks at sampled points
// ===========================================================================

TEST_CASE("adapted frame invariants hold at quasi-random sample points") {
  struct Family {
    std::shared_ptr<const ModelManifold> model;
    double tol;
  };
  const Family families[] = {
      {heisenberg(1), 1e-10},          {heisenberg(2), 1e-10},
      {sphere(1), 1e-10},              {sphere(2), 1e-10},
      {scaled_heisenberg(1, 0.1), 1e-6},
  };
  for (const Family& f : families) {
    CAPTURE(f.model->id());
    for (const ChartPoint& p : sample_points(*f.model, 20, 17u)) {
      const AdaptedFrame fr = f.model->adapted_frame(p.coords);
      for (const auto& [name, residual] : adapted_frame_residuals(*f.model, fr)) {
        CAPTURE(name);
        if (name == "g_min_eigenvalue")
          CHECK(residual > 0.5);
        else
          CHECK(residual < f.tol);
      }
    }
  }
}

TEST_CASE("frame jets agree with finite differences of the frame values") {
  for (auto m : {heisenberg(1), heisenberg(2), sphere(1), sphere(2),
                 scaled_heisenberg(1, 0.1)}) {
    CAPTURE(m->id());
    for (const ChartPoint& p : sample_points(*m, 8, 23u))
      CHECK(frame_jet_fd_residual(*m, p.coords) < 1e-6);
  }
}

// ===========================================================================
// Contract violations
// ===========================================================================

TEST_CASE("dimension and base-point mismatches are rejected") {
  auto m = heisenberg(1);
  CHECK_THROWS_AS(m->make_point(Vec::Zero(4)), std::invalid_argument);
  CHECK_THROWS_AS(m->make_tangent(Vec::Zero(3), Vec::Zero(2)),
                  std::invalid_argument);

  const ChartPoint p = m->make_point(vec3(0.1, 0.2, 0.3));
  const ChartPoint q = m->make_point(vec3(1.1, 0.2, 0.3));
  const Tangent at_q = m->make_tangent(q.coords, vec3(1, 0, 0));
  CHECK_THROWS_AS(dtheta(*m, p, at_q, at_q), std::invalid_argument);
  CHECK_THROWS_AS(webster_metric(*m, p, at_q, at_q), std::invalid_argument);

  // Tangents from one model are rejected by another.
  auto m2 = heisenberg(2);
  const ChartPoint p5 = m2->make_point(Vec::Zero(5));
  const Tangent u5 = m2->make_tangent(p5.coords, Vec::Ones(5));
  CHECK_THROWS_AS(omega(*m2, p5, u5,
                        Tangent{p, vec3(1, 0, 0)}),
                  std::invalid_argument);
}
