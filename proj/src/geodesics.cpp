#include "pseudoherm/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pseudoherm/connection.hpp"

namespace pseudoherm {

namespace {

// ===========================================================================
// Dense output: cubic Hermite on (value, derivative) node pairs
// ===========================================================================

int find_interval(const std::vector<double>& grid, double t) {
  const double span = std::max(1.0, grid.back() - grid.front());
  require(t >= grid.front() - 1e-9 * span && t <= grid.back() + 1e-9 * span,
          "dense output queried outside the solution domain");
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  int k = static_cast<int>(it - grid.begin()) - 1;
  return std::clamp(k, 0, static_cast<int>(grid.size()) - 2);
}

struct HermiteWeights {
  double w0, wd0, w1, wd1;  // value weights
  double q0, qd0, q1, qd1;  // derivative weights
};

HermiteWeights hermite_weights(double tk, double tk1, double t) {
  const double d = tk1 - tk;
  const double s = (t - tk) / d;
  HermiteWeights w;
  w.w0 = (2 * s - 3) * s * s + 1;
  w.wd0 = ((s - 2) * s + 1) * s * d;
  w.w1 = (3 - 2 * s) * s * s;
  w.wd1 = (s - 1) * s * s * d;
  w.q0 = 6 * s * (s - 1) / d;
  w.qd0 = (3 * s - 4) * s + 1;
  w.q1 = -w.q0;
  w.qd1 = (3 * s - 2) * s;
  return w;
}

// ===========================================================================
// RK4 driver over a packed state vector
// ===========================================================================

template <typename Rhs, typename Post>
Vec rk4_step(const Vec& y, double t, double h, const Rhs& rhs,
             const Post& post) {
  const Vec k1 = rhs(t, y);
  const Vec k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
  const Vec k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
  const Vec k4 = rhs(t + h, y + h * k3);
  return post(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

void check_initial(const ModelManifold& model, const Vec& x0, double t_max,
                   double h) {
  require(static_cast<int>(x0.size()) == model.chart_dim(),
          "initial point dimension mismatch on model " + model.id());
  require(h > 0.0, "integration step must be positive");
  require(t_max >= 0.0, "integration horizon must be nonnegative");
}

// Shared node bookkeeping for the connection-form and Hamiltonian routes.
void record_diagnostics(CurveSolution& sol) {
  const ModelManifold& m = *sol.model;
  double theta_max = 0.0;
  double speed0 = -1.0, drift = 0.0;
  for (int k = 0; k < sol.nodes(); ++k) {
    const Vec th = m.theta(sol.x[k]);
    theta_max = std::max(theta_max, std::abs(th.dot(sol.v[k])));
    const double sp = std::sqrt(
        std::max(0.0, sol.v[k].dot(m.metric_matrix(sol.x[k]) * sol.v[k])));
    if (k == 0)
      speed0 = sp;
    else if (speed0 > 1e-14)
      drift = std::max(drift, std::abs(sp - speed0) / speed0);
  }
  sol.theta_residual_max = theta_max;
  sol.speed_drift_rel = drift;
}

std::vector<double> step_sizes(double t_max, double h) {
  std::vector<double> out;
  double t = 0.0;
  while (t < t_max - 1e-12 * std::max(1.0, t_max)) {
    const double step = std::min(h, t_max - t);
    out.push_back(step);
    t += step;
  }
  return out;
}

// ===========================================================================
// Connection-form right-hand side
// ===========================================================================
//
//   ẋ = v
//   v̇ = −Γ_∇(v, v) − 2 b J v      (Γ_∇ = full covariant-derivative action)
//   ḃ = A(v, v)
//
// The Tanaka-Webster geodesic is the b-free specialization.

struct ConnRates {
  Vec dx, dv;
  double db;
};

ConnRates conn_rates(const ModelManifold& model, const Vec& x, const Vec& v,
                     double b, bool with_b) {
  const auto section = model.frame_field(x);
  const TwPointData data = tw_point_data(model, *section, model.make_point(x));
  const Vec zero = Vec::Zero(x.size());
  ConnRates r;
  r.dx = v;
  r.dv = -tw_cov(model, data, v, v, zero);
  r.db = 0.0;
  if (with_b) {
    r.dv -= 2.0 * b * (data.j * v);
    r.db = data.a(v, v);
  }
  return r;
}

CurveSolution integrate_connection_route(
    std::shared_ptr<const ModelManifold> model, const Vec& x0, const Vec& v0,
    double b0, bool with_b, double t_max, double h) {
  const ModelManifold& m = *model;
  check_initial(m, x0, t_max, h);
  require(static_cast<int>(v0.size()) == m.chart_dim(),
          "initial velocity dimension mismatch on model " + m.id());

  const int cd = m.chart_dim();
  auto rhs = [&](double, const Vec& y) {
    const ConnRates r =
        conn_rates(m, y.head(cd), y.segment(cd, cd), y[2 * cd], with_b);
    Vec dy(2 * cd + 1);
    dy << r.dx, r.dv, r.db;
    return dy;
  };
  auto post = [&](Vec y) {
    y.head(cd) = m.project(y.head(cd));
    y.segment(cd, cd) = m.tangentialize(y.head(cd), y.segment(cd, cd));
    return y;
  };

  CurveSolution sol;
  sol.model = model;
  sol.h = h;
  const Vec th0 = m.theta(x0);
  sol.lengthy = std::abs(th0.dot(v0)) < 1e-9 * std::max(1.0, v0.norm());

  Vec y(2 * cd + 1);
  y << m.project(x0), m.tangentialize(m.project(x0), v0), b0;
  double t = 0.0;
  auto record = [&]() {
    const ConnRates r =
        conn_rates(m, y.head(cd), y.segment(cd, cd), y[2 * cd], with_b);
    sol.t_grid.push_back(t);
    sol.x.push_back(y.head(cd));
    sol.v.push_back(y.segment(cd, cd));
    sol.dv.push_back(r.dv);
    if (with_b) {
      sol.b.push_back(y[2 * cd]);
      sol.db.push_back(r.db);
    }
  };

  record();
  for (double step : step_sizes(t_max, h)) {
    try {
      y = rk4_step(y, t, step, rhs, post);
      if (!y.allFinite()) throw NumericError("state left the finite domain");
      t += step;
      record();
    } catch (const IntegrationError&) {
      throw;
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "geodesic integration failed on model " << m.id() << " after t = "
         << t << ": " << e.what();
      throw IntegrationError(os.str(), t);
    }
  }
  record_diagnostics(sol);
  return sol;
}

// ===========================================================================
// Hamiltonian right-hand side
// ===========================================================================
//
//   H(x, ξ) = (1/2) ξᵀ G(x) ξ,   G = Σ_a e_a e_aᵀ  (contact cometric)
//   ẋ_i = (G ξ)_i,   ξ̇_i = −(1/2) ξᵀ (∂_i G) ξ = −Σ_a (ξ·∂_i e_a)(ξ·e_a)

struct HamRates {
  Vec dx, dxi;
  Vec v;        // G ξ, the curve velocity
  Vec dv;       // d/dt (G ξ) for the velocity interpolant
  double b;     // ξ(T)
  double db;    // d/dt ξ(T)
};

HamRates ham_rates(const ModelManifold& model, const Vec& x, const Vec& xi) {
  const auto section = model.frame_field(x);
  const FrameJet jet = section->jet(x);
  const int cd = model.chart_dim();
  const int m = model.h_dim();

  Mat G = Mat::Zero(cd, cd);
  for (int a = 0; a < m; ++a)
    G += jet.horizontal.col(a) * jet.horizontal.col(a).transpose();

  HamRates r;
  r.dx = G * xi;
  r.v = r.dx;
  r.dxi = Vec::Zero(cd);
  Mat dG_dt = Mat::Zero(cd, cd);  // Σ_i ẋ_i ∂_i G
  for (int i = 0; i < cd; ++i) {
    double s = 0.0;
    Mat dGi = Mat::Zero(cd, cd);
    for (int a = 0; a < m; ++a) {
      const Vec e = jet.horizontal.col(a);
      const Vec de = jet.d_horizontal[a].col(i);
      s += (xi.dot(de)) * (xi.dot(e));
      dGi += de * e.transpose() + e * de.transpose();
    }
    r.dxi[i] = -s;
    dG_dt += r.dx[i] * dGi;
  }
  r.dv = dG_dt * xi + G * r.dxi;
  r.b = xi.dot(jet.reeb);
  r.db = r.dxi.dot(jet.reeb) + xi.dot(jet.d_reeb * r.dx);
  return r;
}

}  // namespace

// ===========================================================================
// Public integrators
// ===========================================================================

CurveSolution integrate_tw_geodesic(std::shared_ptr<const ModelManifold> model,
                                    const Vec& x0, const Vec& v0, double t_max,
                                    double h) {
  return integrate_connection_route(std::move(model), x0, v0, 0.0, false,
                                    t_max, h);
}

CurveSolution integrate_sr_geodesic(std::shared_ptr<const ModelManifold> model,
                                    const Vec& x0, const Vec& v0, double b0,
                                    double t_max, double h) {
  const ModelManifold& m = *model;
  require(static_cast<int>(v0.size()) == m.chart_dim(),
          "initial velocity dimension mismatch on model " + m.id());
  const double scale = std::max(1.0, v0.norm());
  require(v0.norm() > 1e-12, "sub-Riemannian geodesic needs nonzero v0");
  require(std::abs(m.theta(m.project(x0)).dot(v0)) < 1e-8 * scale,
          "sub-Riemannian geodesic needs horizontal v0");
  return integrate_connection_route(std::move(model), x0, v0, b0, true, t_max,
                                    h);
}

CurveSolution integrate_hamiltonian(std::shared_ptr<const ModelManifold> model,
                                    const Vec& x0, const Vec& xi0, double t_max,
                                    double h) {
  const ModelManifold& m = *model;
  check_initial(m, x0, t_max, h);
  require(static_cast<int>(xi0.size()) == m.chart_dim(),
          "initial momentum dimension mismatch on model " + m.id());

  const int cd = m.chart_dim();
  auto rhs = [&](double, const Vec& y) {
    const HamRates r = ham_rates(m, y.head(cd), y.tail(cd));
    Vec dy(2 * cd);
    dy << r.dx, r.dxi;
    return dy;
  };
  auto post = [&](Vec y) {
    y.head(cd) = m.project(y.head(cd));
    return y;
  };

  CurveSolution sol;
  sol.model = model;
  sol.h = h;
  sol.lengthy = true;  // base velocity G ξ is horizontal by construction

  Vec y(2 * cd);
  y << m.project(x0), xi0;
  double t = 0.0;
  auto record = [&]() {
    const HamRates r = ham_rates(m, y.head(cd), y.tail(cd));
    sol.t_grid.push_back(t);
    sol.x.push_back(y.head(cd));
    sol.v.push_back(r.v);
    sol.dv.push_back(r.dv);
    sol.b.push_back(r.b);
    sol.db.push_back(r.db);
    sol.xi.push_back(y.tail(cd));
  };

  record();
  for (double step : step_sizes(t_max, h)) {
    try {
      y = rk4_step(y, t, step, rhs, post);
      if (!y.allFinite()) throw NumericError("state left the finite domain");
      t += step;
      record();
    } catch (const IntegrationError&) {
      throw;
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "Hamiltonian integration failed on model " << m.id()
         << " after t = " << t << ": " << e.what();
      throw IntegrationError(os.str(), t);
    }
  }
  record_diagnostics(sol);
  return sol;
}

Vec hamiltonian_momentum(const ModelManifold& model, const Vec& x0,
                         const Vec& v0, double b0) {
  const Vec x = model.project(x0);
  return model.metric_matrix(x) * model.tangentialize(x, v0) +
         b0 * model.theta(x);
}

// ===========================================================================
// Dense output
// ===========================================================================

Vec CurveSolution::position(double t) const {
  if (nodes() == 1) return x.front();
  const int k = find_interval(t_grid, t);
  const HermiteWeights w = hermite_weights(t_grid[k], t_grid[k + 1], t);
  return w.w0 * x[k] + w.wd0 * v[k] + w.w1 * x[k + 1] + w.wd1 * v[k + 1];
}

Vec CurveSolution::velocity(double t) const {
  if (nodes() == 1) return v.front();
  const int k = find_interval(t_grid, t);
  const HermiteWeights w = hermite_weights(t_grid[k], t_grid[k + 1], t);
  return w.w0 * v[k] + w.wd0 * dv[k] + w.w1 * v[k + 1] + w.wd1 * dv[k + 1];
}

Vec CurveSolution::acceleration(double t) const {
  if (nodes() == 1) return dv.front();
  const int k = find_interval(t_grid, t);
  const HermiteWeights w = hermite_weights(t_grid[k], t_grid[k + 1], t);
  return w.q0 * v[k] + w.qd0 * dv[k] + w.q1 * v[k + 1] + w.qd1 * dv[k + 1];
}

double CurveSolution::b_at(double t) const {
  if (b.empty()) return 0.0;
  if (nodes() == 1) return b.front();
  const int k = find_interval(t_grid, t);
  const HermiteWeights w = hermite_weights(t_grid[k], t_grid[k + 1], t);
  return w.w0 * b[k] + w.wd0 * db[k] + w.w1 * b[k + 1] + w.wd1 * db[k + 1];
}

double CurveSolution::speed(double t) const {
  const Vec xt = position(t);
  const Vec vt = velocity(t);
  return std::sqrt(std::max(0.0, vt.dot(model->metric_matrix(xt) * vt)));
}

// ===========================================================================
// Cotangent lifts
// ===========================================================================

CotangentLift canonical_lift(const CurveSolution& sol) {
  require_domain(sol.theta_residual_max < 1e-7,
                 "cotangent lift requires a lengthy curve");
  const ModelManifold& m = *sol.model;
  CotangentLift lift;
  lift.t_grid = sol.t_grid;
  lift.xi.reserve(sol.t_grid.size());
  for (int k = 0; k < sol.nodes(); ++k)
    lift.xi.push_back(m.metric_matrix(sol.x[k]) * sol.v[k] + m.theta(sol.x[k]));
  return lift;
}

double strichartz_a(const CurveSolution& sol, double t) {
  require_domain(t > sol.t0() && t < sol.t1(),
                 "vertical coefficient needs an interior parameter");
  const ModelManifold& m = *sol.model;
  const Vec x = sol.position(t);
  const Vec v = sol.velocity(t);
  const Vec acc = sol.acceleration(t);
  const Mat g = m.metric_matrix(x);
  const double speed2 = v.dot(g * v);
  require_domain(speed2 > 1e-20,
                 "vertical coefficient needs nonvanishing velocity");

  const Vec d_vv = acc + m.levi_civita_cov(x, v, v, Vec::Zero(x.size()));
  const Vec jv = m.j_coord(x) * v;
  return -0.5 * d_vv.dot(g * jv) / speed2 - 1.0;
}

// ===========================================================================
// Arc length
// ===========================================================================

double curve_length(const CurveSolution& sol, double a, double b) {
  require(a >= sol.t0() - 1e-9 && b <= sol.t1() + 1e-9,
          "length interval outside the solution domain");
  require_domain(b >= a, "length interval is reversed");
  double total = 0.0;
  for (int k = 0; k + 1 < sol.nodes(); ++k) {
    const double lo = std::max(a, sol.t_grid[k]);
    const double hi = std::min(b, sol.t_grid[k + 1]);
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi);
    total += (hi - lo) / 6.0 *
             (sol.speed(lo) + 4.0 * sol.speed(mid) + sol.speed(hi));
  }
  return total;
}

}  // namespace pseudoherm
