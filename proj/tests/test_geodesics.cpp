#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pseudoherm/connection.hpp"
#include "pseudoherm/geodesics.hpp"
#include "pseudoherm/models.hpp"

using namespace pseudoherm;

namespace {

Vec unit_horizontal(const ModelManifold& m, const Vec& x, double angle) {
  const FrameJet jet = m.frame_field(x)->jet(x);
  return std::cos(angle) * jet.horizontal.col(0) +
         std::sin(angle) * jet.horizontal.col(1);
}

double contact_energy(const ModelManifold& m, const Vec& x, const Vec& xi) {
  const FrameJet jet = m.frame_field(x)->jet(x);
  double s = 0.0;
  for (int a = 0; a < m.h_dim(); ++a) {
    const double c = xi.dot(jet.horizontal.col(a));
    s += c * c;
  }
  return 0.5 * s;
}

double torsion_quadratic(const ModelManifold& m, const Vec& x, const Vec& v) {
  const auto section = m.frame_field(x);
  const TwPointData data = tw_point_data(m, *section, m.make_point(x));
  return data.a(v, v);
}

double route_gap(std::shared_ptr<const ModelManifold> m, const Vec& x0,
                 const Vec& v0, double b0, double t_max, double h) {
  auto sr = integrate_sr_geodesic(m, x0, v0, b0, t_max, h);
  auto ham = integrate_hamiltonian(m, x0, hamiltonian_momentum(*m, x0, v0, b0),
                                   t_max, h);
  double sup = 0.0;
  for (int k = 0; k < sr.nodes(); ++k)
    sup = std::max(sup, (sr.x[k] - ham.x[k]).norm());
  return sup;
}

// Heisenberg wrapper whose contact form degenerates to NaN past a wall in the
// first coordinate, to exercise mid-integration failure reporting.
class NanWallModel final : public ModelManifold {
 public:
  NanWallModel() : inner_(heisenberg(1)) {}

  std::string id() const override { return "nan-wall"; }
  int n() const override { return inner_->n(); }
  int chart_dim() const override { return inner_->chart_dim(); }
  Vec theta(const Vec& x) const override {
    Vec th = inner_->theta(x);
    if (x[0] > 0.45) th[0] = std::numeric_limits<double>::quiet_NaN();
    return th;
  }
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

 private:
  std::shared_ptr<const ModelManifold> inner_;
};

}  // namespace

TEST_CASE("flat group geodesics: straight line and constant curve") {
  auto heis = heisenberg(1);
  Vec x0 = Vec::Zero(3);
  Vec v0 = Vec::Zero(3);
  v0[0] = 1.0;

  auto sol = integrate_tw_geodesic(heis, x0, v0, 2.0, 1e-3);
  CHECK(sol.lengthy);
  CHECK(sol.theta_residual_max < 1e-7);
  CHECK(sol.speed_drift_rel < 1e-7);

  // Unit-speed line along the first horizontal direction.
  const Vec at_one = sol.position(1.0);
  CHECK(std::abs(at_one[0] - 1.0) < 1e-9);
  CHECK(std::abs(at_one[1]) < 1e-9);
  CHECK(std::abs(at_one[2]) < 1e-9);
  const Vec vel = sol.velocity(1.37);
  CHECK((vel - v0).norm() < 1e-9);

  // Zero initial velocity freezes the curve on every model family.
  for (auto m : {heisenberg(1), sphere(1), scaled_heisenberg(1, 0.1)}) {
    const Vec p = sample_points(*m, 1, 7)[0].coords;
    auto rest = integrate_tw_geodesic(m, p, Vec::Zero(m->chart_dim()), 1.0,
                                      1e-2);
    CHECK((rest.position(0.73) - rest.x.front()).norm() < 1e-14);
    CHECK(rest.velocity(0.73).norm() < 1e-14);
  }
}

TEST_CASE("sphere geodesics keep their speed and stay on the manifold") {
  auto sph = sphere(1);
  Vec x0 = Vec::Zero(4);
  x0[0] = 1.0;

  // Horizontal start: closes after a full turn.
  Vec v0 = Vec::Zero(4);
  v0[1] = 1.0;
  REQUIRE(std::abs(sph->theta(x0).dot(v0)) < 1e-14);
  auto horiz = integrate_tw_geodesic(sph, x0, v0, 2 * M_PI, 1e-3);
  CHECK(horiz.speed_drift_rel < 1e-8);
  CHECK(horiz.theta_residual_max < 1e-7);
  CHECK((horiz.position(2 * M_PI) - x0).norm() < 1e-8);
  for (const Vec& p : horiz.x) CHECK(std::abs(p.norm() - 1.0) < 1e-12);

  // General (non-horizontal) start: speed still constant.
  Vec w0 = Vec::Zero(4);
  w0[1] = 0.8;
  w0[2] = 0.6;
  w0 = sph->tangentialize(x0, w0);
  w0 /= std::sqrt(w0.dot(sph->metric_matrix(x0) * w0));
  auto skew = integrate_tw_geodesic(sph, x0, w0, 2 * M_PI, 1e-3);
  CHECK(skew.speed_drift_rel < 1e-8);
}

TEST_CASE("sub-Riemannian circle: radius, period, multiplier") {
  auto heis = heisenberg(1);
  Vec x0 = Vec::Zero(3);
  Vec v0 = Vec::Zero(3);
  v0[0] = 1.0;
  const double beta = 0.8;
  const double period = M_PI / beta;

  auto sol = integrate_sr_geodesic(heis, x0, v0, beta, period + 0.5, 1e-3);
  CHECK(sol.lengthy);
  CHECK(sol.theta_residual_max < 1e-7);
  CHECK(sol.speed_drift_rel < 1e-7);

  // Planar projection circles about (0, -1/(2 beta)) with radius 1/(2 beta).
  const double radius = 1.0 / (2.0 * beta);
  for (const Vec& p : sol.x) {
    const double r = std::hypot(p[0], p[1] + radius);
    CHECK(std::abs(r - radius) < 1e-6);
  }
  const Vec back = sol.position(period);
  CHECK(std::hypot(back[0], back[1]) < 1e-6);

  // Multiplier is frozen on a torsion-free model.
  for (double b : sol.b) CHECK(std::abs(b - beta) < 1e-9);

  // Arc length: unit-speed prefix, one full period, additivity.
  CHECK(std::abs(curve_length(sol, 0.0, 1.3) - 1.3) < 1e-9);
  CHECK(std::abs(curve_length(sol, 0.0, period) - period) < 1e-6);
  const double whole = curve_length(sol, 0.2, 3.1);
  const double split = curve_length(sol, 0.2, 1.712345) +
                       curve_length(sol, 1.712345, 3.1);
  CHECK(std::abs(whole - split) < 1e-12);
  CHECK_THROWS_AS(curve_length(sol, 2.0, 1.0), std::domain_error);
}

TEST_CASE("zero multiplier reduces to the connection geodesic") {
  auto heis = heisenberg(1);
  Vec x0 = Vec::Zero(3);
  const Vec v0 = unit_horizontal(*heis, x0, 0.4);

  auto tw = integrate_tw_geodesic(heis, x0, v0, 2.0, 1e-3);
  auto sr = integrate_sr_geodesic(heis, x0, v0, 0.0, 2.0, 1e-3);
  double sup = 0.0;
  for (int k = 0; k < tw.nodes(); ++k)
    sup = std::max(sup, (tw.x[k] - sr.x[k]).norm());
  CHECK(sup < 1e-10);
}

TEST_CASE("torsion feeds the multiplier on the scaled model") {
  auto sc = scaled_heisenberg(1, 0.1);
  Vec x0(3);
  x0 << 0.3, -0.2, 0.5;
  const Vec v0 = unit_horizontal(*sc, x0, M_PI / 4);

  auto sol = integrate_sr_geodesic(sc, x0, v0, 0.0, 1.0, 1e-3);
  CHECK(sol.theta_residual_max < 1e-7);
  CHECK(sol.speed_drift_rel < 1e-7);

  // b(t) genuinely moves, and its derivative tracks A along the curve.
  double bmax = 0.0;
  for (double b : sol.b) bmax = std::max(bmax, std::abs(b));
  CHECK(bmax > 1e-4);
  for (double t = 0.1; t < 0.95; t += 0.17) {
    const double d = 1e-4;
    const double bp = (sol.b_at(t + d) - sol.b_at(t - d)) / (2 * d);
    CHECK(std::abs(bp - torsion_quadratic(*sc, sol.position(t),
                                          sol.velocity(t))) < 1e-7);
  }

  // The connection geodesic meets genuinely nonzero torsion along the way,
  // so it cannot satisfy the coupled system with a frozen multiplier.
  auto tw = integrate_tw_geodesic(sc, x0, v0, 1.0, 1e-3);
  double amax = 0.0;
  for (int k = 0; k < tw.nodes(); ++k)
    amax = std::max(amax, std::abs(torsion_quadratic(*sc, tw.x[k], tw.v[k])));
  CHECK(amax > 1e-4);
}

TEST_CASE("Sasakian models freeze the multiplier") {
  auto sph = sphere(1);
  Vec x0 = Vec::Zero(4);
  x0[0] = 1.0;
  Vec v0 = Vec::Zero(4);
  v0[1] = 1.0;
  auto sol = integrate_sr_geodesic(sph, x0, v0, 0.7, 3.0, 1e-3);
  for (double b : sol.b) CHECK(std::abs(b - 0.7) < 1e-9);
}

TEST_CASE("Hamiltonian route conserves energy over long horizons") {
  auto heis = heisenberg(1);
  auto sc = scaled_heisenberg(1, 0.1);
  Vec hx0 = Vec::Zero(3);
  Vec sx0(3);
  sx0 << 0.3, -0.2, 0.5;

  for (const auto& [m, x0] :
       {std::pair{heis, hx0}, std::pair{sc, sx0}}) {
    const Vec v0 = unit_horizontal(*m, x0, 1.1);
    const Vec xi0 = hamiltonian_momentum(*m, x0, v0, 0.4);
    auto sol = integrate_hamiltonian(m, x0, xi0, 10.0, 1e-3);
    const double e0 = contact_energy(*m, sol.x.front(), sol.xi.front());
    double drift = 0.0;
    for (int k = 0; k < sol.nodes(); ++k)
      drift = std::max(drift,
                       std::abs(contact_energy(*m, sol.x[k], sol.xi[k]) - e0));
    CHECK(drift / e0 < 1e-7);
    CHECK(sol.theta_residual_max < 1e-7);
    CHECK(sol.speed_drift_rel < 1e-7);
  }
}

TEST_CASE("momentum annihilating the horizontal space freezes the base") {
  auto heis = heisenberg(1);
  Vec x0(3);
  x0 << 0.2, 0.1, -0.3;
  auto sol = integrate_hamiltonian(heis, x0, heis->theta(x0), 1.0, 1e-3);
  for (const Vec& p : sol.x) CHECK((p - x0).norm() < 1e-12);
  for (double b : sol.b) CHECK(std::abs(b - 1.0) < 1e-12);
}

TEST_CASE("both geodesic routes agree across twenty random seeds") {
  auto heis = heisenberg(1);
  auto sc = scaled_heisenberg(1, 0.1);
  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
  std::uniform_real_distribution<double> mult(-1.0, 1.0);

  for (int s = 0; s < 20; ++s) {
    const auto& m = (s % 2 == 0) ? heis : sc;
    const Vec x0 = sample_points(*m, 1, 100 + s)[0].coords;
    const Vec v0 = unit_horizontal(*m, x0, angle(rng));
    const double b0 = mult(rng);
    CHECK(route_gap(m, x0, v0, b0, 1.0, 1e-3) < 1e-5);
  }

  // Fourth-order convergence: halving the step shrinks the disagreement by
  // at least 8x (measured at coarse steps, above the roundoff floor).
  Vec hx0 = Vec::Zero(3);
  const Vec hv0 = unit_horizontal(*heis, hx0, 0.0);
  const double g1 = route_gap(heis, hx0, hv0, 0.8, 1.0, 0.05);
  const double g2 = route_gap(heis, hx0, hv0, 0.8, 1.0, 0.025);
  CHECK(g1 / g2 >= 8.0);

  Vec sx0(3);
  sx0 << 0.3, -0.2, 0.5;
  const Vec sv0 = unit_horizontal(*sc, sx0, M_PI / 4);
  const double s1 = route_gap(sc, sx0, sv0, 0.4, 1.0, 0.05);
  const double s2 = route_gap(sc, sx0, sv0, 0.4, 1.0, 0.025);
  CHECK(s1 / s2 >= 8.0);
}

TEST_CASE("canonical lift invariants") {
  auto heis = heisenberg(1);
  Vec x0 = Vec::Zero(3);
  const Vec v0 = unit_horizontal(*heis, x0, 0.9);
  auto sol = integrate_sr_geodesic(heis, x0, v0, 0.5, 2.0, 1e-3);
  auto lift = canonical_lift(sol);

  for (int k = 0; k < sol.nodes(); ++k) {
    const Vec T = heis->reeb(sol.x[k]);
    CHECK(std::abs(lift.xi[k].dot(T) - 1.0) < 1e-10);
    // Raising the index with the contact cometric recovers the velocity.
    const FrameJet jet = heis->frame_field(sol.x[k])->jet(sol.x[k]);
    Vec raised = Vec::Zero(3);
    for (int a = 0; a < heis->h_dim(); ++a)
      raised += lift.xi[k].dot(jet.horizontal.col(a)) * jet.horizontal.col(a);
    CHECK((raised - sol.v[k]).norm() < 1e-8);
  }

  // Constant curve lifts to the contact form itself.
  auto rest = integrate_tw_geodesic(heis, x0, Vec::Zero(3), 1.0, 1e-2);
  auto rest_lift = canonical_lift(rest);
  for (int k = 0; k < rest.nodes(); ++k)
    CHECK((rest_lift.xi[k] - heis->theta(rest.x[k])).norm() < 1e-12);

  // A Reeb orbit is not lengthy, so it has no canonical lift.
  auto orbit = integrate_tw_geodesic(heis, x0, heis->reeb(x0), 1.0, 1e-2);
  CHECK_THROWS_AS(canonical_lift(orbit), std::domain_error);
}

TEST_CASE("vertical coefficient fixtures and scale invariance") {
  auto heis = heisenberg(1);
  Vec x0 = Vec::Zero(3);
  Vec v0 = Vec::Zero(3);
  v0[0] = 1.0;
  const double beta = 0.8;

  auto tw = integrate_tw_geodesic(heis, x0, v0, 2.0, 1e-3);
  CHECK(std::abs(strichartz_a(tw, 1.0) - (-1.0)) < 1e-8);

  auto sr = integrate_sr_geodesic(heis, x0, v0, beta, 2.0, 1e-3);
  CHECK(std::abs(strichartz_a(sr, 1.0) - (beta - 1.0)) < 1e-7);

  // Doubling the speed (affine reparametrization of the flow) leaves the
  // vertical coefficient unchanged.
  auto tw2 = integrate_tw_geodesic(heis, x0, 2 * v0, 2.0, 1e-3);
  CHECK(std::abs(strichartz_a(tw2, 1.0) - strichartz_a(tw, 1.0)) < 1e-7);
  auto sr2 = integrate_sr_geodesic(heis, x0, 2 * v0, beta, 2.0, 1e-3);
  CHECK(std::abs(strichartz_a(sr2, 1.0) - strichartz_a(sr, 1.0)) < 1e-7);

  CHECK_THROWS_AS(strichartz_a(sr, 0.0), std::domain_error);
  CHECK_THROWS_AS(strichartz_a(sr, 2.0), std::domain_error);
}

TEST_CASE("input validation and divergence reporting") {
  auto heis = heisenberg(1);
  Vec x0 = Vec::Zero(3);
  Vec v0 = Vec::Zero(3);
  v0[0] = 1.0;

  // Sub-Riemannian preconditions: nonzero horizontal velocity.
  CHECK_THROWS_AS(integrate_sr_geodesic(heis, x0, Vec::Zero(3), 0.3, 1.0, 1e-3),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      integrate_sr_geodesic(heis, x0, heis->reeb(x0), 0.3, 1.0, 1e-3),
      std::invalid_argument);
  CHECK_THROWS_AS(integrate_tw_geodesic(heis, x0, v0, 1.0, -1e-3),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_tw_geodesic(heis, Vec::Zero(4), v0, 1.0, 1e-3),
                  std::invalid_argument);

  // Dense output rejects out-of-domain queries.
  auto sol = integrate_tw_geodesic(heis, x0, v0, 1.0, 1e-3);
  CHECK_THROWS_AS(sol.position(1.5), std::invalid_argument);
  CHECK_THROWS_AS(curve_length(sol, -0.5, 0.5), std::invalid_argument);

  // A NaN wall mid-flight surfaces as an integration error that reports the
  // last good parameter.
  auto wall = std::make_shared<NanWallModel>();
  try {
    integrate_tw_geodesic(wall, x0, v0, 1.0, 1e-3);
    CHECK(false);
  } catch (const IntegrationError& e) {
    CHECK(e.last_good_t() > 0.40);
    CHECK(e.last_good_t() < 0.47);
  }
}
