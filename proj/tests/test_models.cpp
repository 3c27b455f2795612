#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "pseudoherm/connection.hpp"
#include "pseudoherm/manifold.hpp"
#include "pseudoherm/models.hpp"

using namespace pseudoherm;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Frame bracket [e_a, e_b] from the jet of the model's frame section.
Vec frame_bracket(const ModelManifold& model, const Vec& x, int a, int b) {
  const FrameJet jet = model.frame_field(x)->jet(x);
  return jet.d_horizontal[b] * jet.horizontal.col(a) -
         jet.d_horizontal[a] * jet.horizontal.col(b);
}

}  // namespace

// ===========================================================================
// Heisenberg groups
// ===========================================================================

TEST_CASE("Heisenberg frame fields satisfy the group structure relations") {
  for (int n : {1, 2}) {
    auto m = heisenberg(n);
    CAPTURE(n);
    CHECK(m->dim() == 2 * n + 1);
    for (const ChartPoint& p : sample_points(*m, 10, 2u)) {
      const Vec th = m->theta(p.coords);
      const Mat E = m->frame_field(p.coords)->horizontal(p.coords);
      CHECK((E.transpose() * th).cwiseAbs().maxCoeff() < 1e-14);

      // [X_α, Y_α] = −2 ∂_t, all other horizontal brackets vanish.
      Vec minus_two_dt = Vec::Zero(m->dim());
      minus_two_dt[m->dim() - 1] = -2.0;
      for (int a = 0; a < n; ++a) {
        const Vec br = frame_bracket(*m, p.coords, 2 * a, 2 * a + 1);
        CHECK((br - minus_two_dt).cwiseAbs().maxCoeff() < 1e-12);
        if (n > 1) {
          const int other = 2 * ((a + 1) % n);
          CHECK(frame_bracket(*m, p.coords, 2 * a, other)
                    .cwiseAbs()
                    .maxCoeff() < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("Heisenberg groups are Tanaka-Webster flat with vanishing torsion") {
  for (int n : {1, 2}) {
    auto m = heisenberg(n);
    CAPTURE(n);
    for (const ChartPoint& p : sample_points(*m, 5, 4u)) {
      const ConnectionData conn = tw_connection(*m, p);
      double gmax = 0.0;
      for (const Mat& ga : conn.gamma)
        gmax = std::max(gmax, ga.cwiseAbs().maxCoeff());
      CHECK(gmax < 1e-10);
      CHECK(conn.tau_matrix.cwiseAbs().maxCoeff() < 1e-12);

      const CurvatureSample sample = curvature_sample(*m, p);
      double rmax = 0.0;
      for (const Mat& op : sample.ops)
        rmax = std::max(rmax, op.cwiseAbs().maxCoeff());
      CHECK(rmax < 1e-8);
    }
  }
}

TEST_CASE("heisenberg rejects invalid CR dimension") {
  CHECK_THROWS_AS(heisenberg(0), std::invalid_argument);
  CHECK_THROWS_AS(sphere(0), std::invalid_argument);
  CHECK_THROWS_AS(scaled_heisenberg(0, 0.1), std::invalid_argument);
}

// ===========================================================================
// CR spheres
// ===========================================================================

TEST_CASE("sphere points stay unit norm and tangents stay tangential") {
  for (int n : {1, 2}) {
    auto m = sphere(n);
    CAPTURE(n);
    CHECK(m->dim() == 2 * n + 1);
    CHECK(m->chart_dim() == 2 * n + 2);
    for (const ChartPoint& p : sample_points(*m, 10, 6u)) {
      CHECK(p.coords.norm() == doctest::Approx(1.0).epsilon(1e-12));
      const Tangent u = sample_tangent(*m, p, 3u);
      CHECK(std::abs(u.components.dot(p.coords)) < 1e-12);

      // Reeb normalization θ(T) = 1.
      CHECK(m->theta(p.coords).dot(m->reeb(p.coords)) ==
            doctest::Approx(1.0).epsilon(1e-10));

      // project renormalizes, tangentialize removes the radial part.
      const Vec drift = 1.07 * p.coords;
      CHECK((m->project(drift) - p.coords).cwiseAbs().maxCoeff() < 1e-12);
      const Vec fixed = m->tangentialize(p.coords, u.components + 0.3 * p.coords);
      CHECK(std::abs(fixed.dot(p.coords)) < 1e-12);
      CHECK((fixed - u.components).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("spheres are Sasakian with holomorphic sectional curvature one") {
  for (int n : {1, 2}) {
    auto m = sphere(n);
    CAPTURE(n);
    for (const ChartPoint& p : sample_points(*m, 5, 8u)) {
      const ConnectionData conn = tw_connection(*m, p);
      CHECK(conn.tau_matrix.cwiseAbs().maxCoeff() < 1e-8);

      Tangent u = sample_tangent(*m, p, 1u);
      u.components = m->horizontal_part(p.coords, u.components);
      const Tangent ju = m->make_tangent(p.coords,
                                         m->j_coord(p.coords) * u.components);
      CHECK(sectional(*m, p, u, ju) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

// ===========================================================================
// Conformally scaled Heisenberg
// ===========================================================================

TEST_CASE("scaling with kappa = 0 reproduces the Heisenberg group") {
  for (int n : {1, 2}) {
    auto flat = heisenberg(n);
    auto scaled = scaled_heisenberg(n, 0.0);
    CAPTURE(n);
    CHECK(scaled->flat_group());
    for (const ChartPoint& p : sample_points(*flat, 10, 9u)) {
      const Vec& x = p.coords;
      CHECK((scaled->theta(x) - flat->theta(x)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((scaled->dtheta_matrix(x) - flat->dtheta_matrix(x))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
      CHECK((scaled->reeb(x) - flat->reeb(x)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((scaled->j_coord(x) - flat->j_coord(x)).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK((scaled->metric_matrix(x) - flat->metric_matrix(x))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("scaled Heisenberg closed-form tensors match finite differences") {
  auto m = scaled_heisenberg(1, 0.1);
  for (const ChartPoint& p : sample_points(*m, 10, 12u)) {
    const Vec& x = p.coords;

    // dθ̂ against a central difference of θ̂ that never sees the closed form.
    const int nc = m->chart_dim();
    Mat D_fd(nc, nc);
    for (int i = 0; i < nc; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      D_fd.row(i) = ((m->theta(xp) - m->theta(xm)) / (2.0 * h)).transpose();
    }
    D_fd -= Mat(D_fd.transpose());
    CHECK((m->dtheta_matrix(x) - D_fd).cwiseAbs().maxCoeff() < 1e-6);

    // The Reeb field solves θ̂(T̂) = 1, T̂ ⨼ dθ̂ = 0.
    const Vec T = m->reeb(x);
    CHECK(m->theta(x).dot(T) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((m->dtheta_matrix(x).transpose() * T).cwiseAbs().maxCoeff() < 1e-10);

    // Levi form stays positive definite on the sampled region.
    const AdaptedFrame fr = m->adapted_frame(x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(fr.g_matrix);
    CHECK(eig.eigenvalues().minCoeff() > 0.5);
  }
}

TEST_CASE("scaled Heisenberg torsion matches the conformal closed form") {
  auto m = scaled_heisenberg(1, 0.1);

  // At (x,y,t) = (0.3, −0.2, 0.5) with κ = 0.1 the torsion matrix on the
  // adapted frame is (κ²e^{−κx}/4) off the diagonal and the Reeb field is
  // e^{−κx}(T − (κ/2)Y₁).
  const Vec x = vec3(0.3, -0.2, 0.5);
  const double expected_a = 0.1 * 0.1 / 4.0 * std::exp(-0.1 * 0.3);
  CHECK(expected_a == doctest::Approx(0.0024261138338712704).epsilon(1e-15));

  const ConnectionData conn = tw_connection(*m, m->make_point(x));
  CHECK(conn.tau_matrix(0, 1) == doctest::Approx(expected_a).epsilon(1e-9));
  CHECK(conn.tau_matrix(1, 0) == doctest::Approx(expected_a).epsilon(1e-9));
  CHECK(std::abs(conn.tau_matrix(0, 0)) < 1e-9);
  CHECK(std::abs(conn.tau_matrix(1, 1)) < 1e-9);

  const Vec T_expected =
      std::exp(-0.03) * vec3(0.0, -0.05, 1.0 + 0.05 * 0.3);
  CHECK((m->reeb(x) - T_expected).cwiseAbs().maxCoeff() < 1e-12);

  // Torsion is genuinely nonzero across the sampled region.
  double amax = 0.0;
  for (const ChartPoint& p : sample_points(*m, 10, 14u))
    amax = std::max(
        amax, tw_connection(*m, p).tau_matrix.cwiseAbs().maxCoeff());
  CHECK(amax > 1e-4);
}

TEST_CASE("scaled Heisenberg satisfies the torsionful curvature identities") {
  auto m = scaled_heisenberg(1, 0.1);
  const ResidualReport report = identity_suite(*m, sample_points(*m, 3, 16u), 4);
  CHECK(report.all_pass());
  CHECK(report.worst("pair_interchange_torsion") < 1e-6);
  CHECK(report.worst("s_antisymmetry") < 1e-6);
}

// ===========================================================================
// Model selection by id
// ===========================================================================

TEST_CASE("model ids round-trip through the factory") {
  CHECK(model_from_id("heisenberg:2", kNan)->id() == "heisenberg:2");
  CHECK(model_from_id("sphere:1", kNan)->id() == "sphere:1");
  CHECK(model_from_id("scaled-heisenberg:1:0.1", kNan)->n() == 1);
  CHECK(model_from_id("scaled-heisenberg:1:0.25", kNan)->id() ==
        "scaled-heisenberg:1:0.25");

  // kappa override replaces the id's value.
  CHECK(model_from_id("scaled-heisenberg:1:0.1", 0.5)->id() ==
        "scaled-heisenberg:1:0.5");

  CHECK_THROWS_AS(model_from_id("klein-bottle:1", kNan), std::invalid_argument);
  CHECK_THROWS_AS(model_from_id("sphere", kNan), std::invalid_argument);
  CHECK_THROWS_AS(model_from_id("heisenberg:0", kNan), std::invalid_argument);
}
