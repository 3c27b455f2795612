#include "pseudoherm/variation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pseudoherm/connection.hpp"

namespace pseudoherm {

namespace {

// ===========================================================================
// Small helpers
// ===========================================================================

double segment_span(const CurveSolution& s) { return s.t1() - s.t0(); }

// Five-point finite-difference rows: kDiff[r][j] / (12 δ) differentiates at
// node r of a uniform five-node cluster.
constexpr double kDiff[5][5] = {
    {-25.0, 48.0, -36.0, 16.0, -3.0},
    {-3.0, -10.0, 18.0, -6.0, 1.0},
    {1.0, -8.0, 0.0, 8.0, -1.0},
    {-1.0, 6.0, -18.0, 10.0, 3.0},
    {3.0, -16.0, 36.0, -48.0, 25.0}};

TwPointData point_data(const ModelManifold& model, const Vec& x) {
  const auto section = model.frame_field(x);
  return tw_point_data(model, *section, model.make_point(x));
}

// Sorted split points of [lo, hi]: the endpoints plus every interior break.
std::vector<double> block_edges(double lo, double hi,
                                const std::vector<double>& breaks_a,
                                const std::vector<double>& breaks_b) {
  std::vector<double> edges{lo, hi};
  auto add = [&](double c) {
    if (c > lo + 1e-12 && c < hi - 1e-12) edges.push_back(c);
  };
  for (double c : breaks_a) add(c);
  for (double c : breaks_b) add(c);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double p, double q) { return q - p < 1e-12; }),
              edges.end());
  return edges;
}

// Composite Simpson over [lo, hi] with one-sided evaluation at the edges
// (prefer_left = false at lo, true at hi), for piecewise-smooth integrands.
double simpson_block(double lo, double hi, int pairs,
                     const std::function<double(double, bool)>& f) {
  const double h = (hi - lo) / (2 * pairs);
  double acc = f(lo, false) + f(hi, true);
  for (int q = 1; q < 2 * pairs; ++q) {
    acc += (q % 2 ? 4.0 : 2.0) * f(lo + q * h, true);
  }
  return acc * h / 3.0;
}

CurveSolution exp_flow(const std::shared_ptr<const ModelManifold>& model,
                       const Vec& x0, const Vec& v0, double smax, int steps) {
  return integrate_tw_geodesic(model, x0, v0, smax, smax / steps);
}

}  // namespace

// ===========================================================================
// Broken curves
// ===========================================================================

double BrokenCurve::t0() const { return offsets.front(); }

double BrokenCurve::t1() const {
  return offsets.back() + segment_span(segments.back());
}

double BrokenCurve::speed() const {
  const CurveSolution& s = segments.front();
  return s.speed(s.t0());
}

std::vector<double> BrokenCurve::corners() const {
  return {offsets.begin() + 1, offsets.end()};
}

int BrokenCurve::segment_at(double t, bool prefer_left) const {
  require(t >= t0() - 1e-12 && t <= t1() + 1e-12,
          "parameter outside the curve domain");
  const int n = static_cast<int>(segments.size());
  for (int i = 0; i + 1 < n; ++i) {
    const double hi = offsets[i + 1];
    if (t < hi) return i;
    if (t == hi) return prefer_left ? i : i + 1;
  }
  return n - 1;
}

Vec BrokenCurve::position(double t) const {
  const int k = segment_at(t, true);
  const CurveSolution& s = segments[k];
  return s.position(std::clamp(t - offsets[k] + s.t0(), s.t0(), s.t1()));
}

Vec BrokenCurve::velocity(double t, bool prefer_left) const {
  const int k = segment_at(t, prefer_left);
  const CurveSolution& s = segments[k];
  return s.velocity(std::clamp(t - offsets[k] + s.t0(), s.t0(), s.t1()));
}

Vec BrokenCurve::acceleration(double t, bool prefer_left) const {
  const int k = segment_at(t, prefer_left);
  const CurveSolution& s = segments[k];
  return s.acceleration(std::clamp(t - offsets[k] + s.t0(), s.t0(), s.t1()));
}

BrokenCurve chain(std::vector<CurveSolution> segments) {
  require(!segments.empty(), "chain: at least one segment is required");
  std::vector<double> offsets(segments.size());
  offsets[0] = segments[0].t0();
  const double r0 = segments[0].speed(segments[0].t0());
  for (size_t k = 0; k < segments.size(); ++k) {
    const CurveSolution& s = segments[k];
    require(segment_span(s) > 0.0, "chain: segment with an empty span");
    require(s.model != nullptr, "chain: segment without a model");
    require(s.model->id() == segments[0].model->id(),
            "chain: segments live on different models");
    const double rk = s.speed(s.t0());
    require(std::abs(rk - r0) <= 1e-6 * std::max(1.0, std::abs(r0)),
            "chain: segments must share one parametrization speed");
    if (k > 0) {
      const Vec gap = segments[k - 1].position(segments[k - 1].t1()) -
                      s.position(s.t0());
      require(gap.norm() < 1e-8, "chain: segments do not share endpoints");
      offsets[k] = offsets[k - 1] + segment_span(segments[k - 1]);
    }
  }
  BrokenCurve curve;
  curve.segments = std::move(segments);
  curve.offsets = std::move(offsets);
  return curve;
}

// ===========================================================================
// Chart components of parallel-frame fields
// ===========================================================================

ChartField chart_field(const JacobiWorkspace& ws, const CurveField& x) {
  struct Interp {
    std::vector<Mat> frames;  // half-grid parallel frames
    double t_start = 0.0;
    double half = 0.0;
    CurveField field;
  };
  auto interp = std::make_shared<Interp>();
  interp->frames = ws.frame.frames;
  interp->t_start = ws.t0();
  interp->half = 0.5 * ws.sol.h;
  interp->field = x;

  return [interp](double t) -> Vec {
    const int count = static_cast<int>(interp->frames.size());
    require(count >= 4, "chart_field: too few frames to interpolate");
    const double tau = (t - interp->t_start) / interp->half;
    int i0 = static_cast<int>(std::floor(tau)) - 1;
    i0 = std::clamp(i0, 0, count - 4);
    const double xi = tau - i0;
    // Cubic Lagrange weights on nodes {0, 1, 2, 3}.
    const double w0 = -(xi - 1) * (xi - 2) * (xi - 3) / 6.0;
    const double w1 = xi * (xi - 2) * (xi - 3) / 2.0;
    const double w2 = -xi * (xi - 1) * (xi - 3) / 2.0;
    const double w3 = xi * (xi - 1) * (xi - 2) / 6.0;
    Mat e = w0 * interp->frames[i0] + w1 * interp->frames[i0 + 1] +
            w2 * interp->frames[i0 + 2] + w3 * interp->frames[i0 + 3];
    return e * interp->field.u_at(t);
  };
}

// ===========================================================================
// Families
// ===========================================================================

ChartPoint CurveFamily::at(double t, double s) const {
  require(std::abs(s) <= eps * (1.0 + 1e-12),
          "family parameter outside the family range");
  require(t >= lo - 1e-12 && t <= hi + 1e-12,
          "curve parameter outside the family window");
  const Vec x0 = base.position(t);
  if (s == 0.0) return model->make_point(x0);
  const Vec seed = x(t);
  if (seed.norm() < 1e-14) return model->make_point(x0);
  const double mag = std::abs(s);
  const int steps =
      std::max(exp_steps, static_cast<int>(std::ceil(mag * seed.norm() / 0.02)));
  const CurveSolution flow =
      exp_flow(model, x0, (s > 0 ? seed : Vec(-seed)), mag, steps);
  return model->make_point(flow.position(mag));
}

double CurveFamily::length(double s) const {
  require(std::abs(s) <= eps * (1.0 + 1e-12),
          "family parameter outside the family range");
  require(!stencils.empty(), "family carries no quadrature stencils");
  const double mag = std::abs(s);
  double acc = 0.0;
  std::array<Vec, 5> p;
  for (const FamilyStencil& st : stencils) {
    for (int j = 0; j < 5; ++j) {
      if (st.frozen[j] || s == 0.0) {
        p[j] = st.base_points[j];
      } else {
        p[j] = (s > 0 ? st.forward[j] : st.backward[j]).position(mag);
      }
    }
    Vec v = Vec::Zero(p[0].size());
    for (int j = 0; j < 5; ++j) v += kDiff[st.row][j] * p[j];
    v /= 12.0 * st.delta;
    const TwPointData data = point_data(*model, p[st.row]);
    const double quad = v.dot(data.g * v);
    acc += st.weight * std::sqrt(std::max(quad, 0.0));
  }
  return acc;
}

namespace {

void build_stencils(CurveFamily& fam) {
  const std::vector<double> edges =
      block_edges(fam.lo, fam.hi, fam.base.corners(), fam.x_corners);
  for (size_t blk = 0; blk + 1 < edges.size(); ++blk) {
    const double blo = edges[blk], bhi = edges[blk + 1];
    const double len = bhi - blo;
    const int pairs = std::clamp(static_cast<int>(std::ceil(len / 0.04)), 3, 400);
    const double hq = len / (2 * pairs);
    const double delta = std::min(5e-4, len / 8.0);
    for (int q = 0; q <= 2 * pairs; ++q) {
      const double t = blo + q * hq;
      FamilyStencil st;
      st.t = t;
      st.weight = (hq / 3.0) * ((q == 0 || q == 2 * pairs) ? 1.0
                                : (q % 2 ? 4.0 : 2.0));
      st.delta = delta;
      const int rmin = static_cast<int>(std::ceil(4.0 - (bhi - t) / delta - 1e-9));
      const int rmax = static_cast<int>(std::floor((t - blo) / delta + 1e-9));
      st.row = std::clamp(2, std::max(rmin, 0), std::min(rmax, 4));
      for (int j = 0; j < 5; ++j) {
        const double tj =
            std::clamp(t + (j - st.row) * delta, fam.base.t0(), fam.base.t1());
        st.base_points[j] = fam.base.position(tj);
        const Vec seed = fam.x(tj);
        st.frozen[j] = seed.norm() < 1e-14;
        if (!st.frozen[j]) {
          const int steps = std::max(
              fam.exp_steps,
              static_cast<int>(std::ceil(fam.eps * seed.norm() / 0.02)));
          st.forward[j] =
              exp_flow(fam.model, st.base_points[j], seed, fam.eps, steps);
          st.backward[j] = exp_flow(fam.model, st.base_points[j], Vec(-seed),
                                    fam.eps, steps);
        }
      }
      fam.stencils.push_back(std::move(st));
    }
  }
}

}  // namespace

CurveFamily make_family(std::shared_ptr<const ModelManifold> model,
                        BrokenCurve base, ChartField x, double eps,
                        std::vector<double> x_corners) {
  require(model != nullptr, "make_family: a model is required");
  require(eps > 0.0, "make_family: the family radius must be positive");
  require(!base.segments.empty(), "make_family: an empty base curve");
  CurveFamily fam;
  fam.model = std::move(model);
  fam.base = std::move(base);
  fam.x = std::move(x);
  fam.x_corners = std::move(x_corners);
  fam.lo = fam.base.t0();
  fam.hi = fam.base.t1();
  fam.eps = eps;
  build_stencils(fam);
  return fam;
}

CurveFamily make_family(const JacobiWorkspace& ws, const CurveField& x,
                        double eps) {
  require(eps > 0.0, "make_family: the family radius must be positive");
  require(x.lo() >= ws.t0() - 1e-12 && x.hi() <= ws.t1() + 1e-12,
          "make_family: the field leaves the curve domain");
  CurveFamily fam;
  fam.model = ws.sol.model;
  fam.base = chain({ws.sol});
  fam.x = chart_field(ws, x);
  fam.x_corners = x.corners();
  fam.lo = x.lo();
  fam.hi = x.hi();
  fam.eps = eps;
  build_stencils(fam);
  return fam;
}

// ===========================================================================
// First variation
// ===========================================================================
//
//   dL/ds|₀ = (1/r) { [g(X, γ̇)]ₐᵇ + Σⱼ g(X(cⱼ), γ̇(cⱼ⁻) − γ̇(cⱼ⁺))
//             − ∫ₐᵇ [ g(X, ∇_γ̇ γ̇) − g(T_∇(X, γ̇), γ̇) ] dt },
//
// with the torsion pairing expanded through
//   g(T_∇(X, γ̇), γ̇) = −2 Ω(X, γ̇) θ(γ̇) + θ(X) A(γ̇, γ̇) − θ(γ̇) A(X, γ̇).

double first_variation_formula(const BrokenCurve& curve, const ChartField& x,
                               double a, double b,
                               const std::vector<double>& breaks) {
  require(!curve.segments.empty(), "first variation: an empty curve");
  require(a < b, "first variation: an empty parameter interval");
  require(a >= curve.t0() - 1e-12 && b <= curve.t1() + 1e-12,
          "first variation: [a, b] leaves the curve domain");
  const double r = curve.speed();
  require_domain(r > 1e-12, "first variation: zero-speed curve");
  const auto model = curve.segments.front().model;

  // Boundary terms, with one-sided velocities pointing into [a, b].
  const TwPointData data_b = point_data(*model, curve.position(b));
  const TwPointData data_a = point_data(*model, curve.position(a));
  double total = x(b).dot(data_b.g * curve.velocity(b, true)) -
                 x(a).dot(data_a.g * curve.velocity(a, false));

  // Corner terms at the curve's own junctions inside (a, b).
  for (double c : curve.corners()) {
    if (c <= a + 1e-12 || c >= b - 1e-12) continue;
    const TwPointData data_c = point_data(*model, curve.position(c));
    const Vec jump = curve.velocity(c, true) - curve.velocity(c, false);
    total += x(c).dot(data_c.g * jump);
  }

  // Acceleration and torsion integral, split at velocity and field kinks.
  auto integrand = [&](double t, bool prefer_left) {
    const Vec pos = curve.position(t);
    const Vec v = curve.velocity(t, prefer_left);
    const Vec dv = curve.acceleration(t, prefer_left);
    const Vec xc = x(t);
    const TwPointData data = point_data(*model, pos);
    const Vec cov = tw_cov(*model, data, v, v, dv);
    const double theta_v = data.theta.dot(v);
    const double torsion = -2.0 * data.omega(xc, v) * theta_v +
                           data.theta.dot(xc) * data.a(v, v) -
                           theta_v * data.a(xc, v);
    return xc.dot(data.g * cov) - torsion;
  };
  const std::vector<double> edges =
      block_edges(a, b, curve.corners(), breaks);
  for (size_t blk = 0; blk + 1 < edges.size(); ++blk) {
    const double blo = edges[blk], bhi = edges[blk + 1];
    const int pairs = std::clamp(
        static_cast<int>(std::ceil((bhi - blo) / 0.02)), 4, 2000);
    total -= simpson_block(blo, bhi, pairs, integrand);
  }
  return total / r;
}

double first_variation_formula(const JacobiWorkspace& ws, const CurveField& x,
                               double a, double b) {
  require(a < b, "first variation: an empty parameter interval");
  require(a >= x.lo() - 1e-12 && b <= x.hi() + 1e-12,
          "first variation: [a, b] leaves the field domain");
  require(a >= ws.t0() - 1e-12 && b <= ws.t1() + 1e-12,
          "first variation: [a, b] leaves the curve domain");
  const double r = ws.speed;
  require_domain(r > 1e-12, "first variation: zero-speed curve");
  const int nf = ws.dim;

  // On a geodesic base the integrand collapses to θ(X) A(γ̇, γ̇); the
  // torsion diagonal is cached on the half-grid.
  const double h = ws.sol.h;
  const double start = ws.t0();
  auto avv_at = [&](double t) {
    const double tau = (t - start) / (0.5 * h);
    const int count = static_cast<int>(ws.a_vv.size());
    int i0 = std::clamp(static_cast<int>(std::floor(tau)) - 1, 0, count - 3);
    const double xi = tau - i0;
    // Quadratic Lagrange on nodes {0, 1, 2}.
    const double w0 = (xi - 1) * (xi - 2) / 2.0;
    const double w1 = -xi * (xi - 2);
    const double w2 = xi * (xi - 1) / 2.0;
    return w0 * ws.a_vv[i0] + w1 * ws.a_vv[i0 + 1] + w2 * ws.a_vv[i0 + 2];
  };
  auto integrand = [&](double t, bool prefer_left) {
    return x.u_at(t, prefer_left)(nf - 1) * avv_at(t);
  };
  double integral = 0.0;
  const std::vector<double> edges = block_edges(a, b, x.corners(), {});
  for (size_t blk = 0; blk + 1 < edges.size(); ++blk) {
    const double blo = edges[blk], bhi = edges[blk + 1];
    const int pairs = std::clamp(
        static_cast<int>(std::ceil((bhi - blo) / h)), 2, 4000);
    integral += simpson_block(blo, bhi, pairs, integrand);
  }
  const double boundary =
      r * (x.u_at(b, true)(0) - x.u_at(a, false)(0));
  return (boundary + integral) / r;
}

// ===========================================================================
// Finite differences of the length functional
// ===========================================================================

namespace {

double safe_length(const CurveFamily& family, double s) {
  try {
    return family.length(s);
  } catch (const NumericError&) {
    throw;
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw NumericError(std::string("length evaluation failed: ") + e.what());
  }
}

}  // namespace

double first_variation_fd(const CurveFamily& family) {
  const double s0 = 1e-4;
  require(family.eps >= s0 * (1.0 - 1e-12),
          "first variation FD: the family radius is below the step 1e-4");
  auto central = [&](double q) {
    return (safe_length(family, q) - safe_length(family, -q)) / (2.0 * q);
  };
  return (4.0 * central(s0 / 2) - central(s0)) / 3.0;
}

double second_variation_fd(const CurveFamily& family) {
  const double s0 = 1e-3;
  require(family.eps >= s0 * (1.0 - 1e-12),
          "second variation FD: the family radius is below the step 1e-3");
  for (const CurveSolution& seg : family.base.segments) {
    require_domain(seg.lengthy,
                   "second variation: the base curve is not lengthy");
  }
  const double l0 = safe_length(family, 0.0);
  auto second = [&](double q) {
    return (safe_length(family, q) - 2.0 * l0 + safe_length(family, -q)) /
           (q * q);
  };
  return (4.0 * second(s0 / 2) - second(s0)) / 3.0;
}

// ===========================================================================
// Nonminimality demonstration
// ===========================================================================

NonminimalityReport nonminimality_demo(const JacobiWorkspace& ws, double a,
                                       double c, double b, double delta) {
  NonminimalityReport report;
  report.broken = negative_index_field(ws, a, c, b, delta);

  const CurveFamily family = make_family(ws, report.broken.field, 0.35);
  report.base_length = family.length(0.0);
  report.first_variation = first_variation_fd(family);
  report.second_variation = second_variation_fd(family);

  report.s_star = 0.0;
  report.improved_length = report.base_length;
  for (double mag : {0.02, 0.04, 0.07, 0.1, 0.14, 0.2, 0.27, 0.34}) {
    for (double sign : {1.0, -1.0}) {
      const double s = sign * mag;
      const double l = family.length(s);
      if (l < report.improved_length) {
        report.improved_length = l;
        report.s_star = s;
      }
    }
  }
  return report;
}

NonminimalityReport nonminimality_demo(const CurveSolution& sol, double a,
                                       double c, double b, double delta) {
  return nonminimality_demo(make_jacobi_workspace(sol), a, c, b, delta);
}

}  // namespace pseudoherm
