#include "pseudoherm/jacobi.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "pseudoherm/types.hpp"

namespace pseudoherm {

namespace {

// ===========================================================================
// Dense output helpers
// ===========================================================================

// Cubic Hermite interpolation of (value, derivative) pairs at the interval
// ends. Fourth-order accurate for the value channel.
Vec hermite(double t, double ta, double tb, const Vec& ya, const Vec& da,
            const Vec& yb, const Vec& db) {
  const double w = tb - ta;
  if (w <= 0.0) return ya;
  const double s = (t - ta) / w;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * ya + (h10 * w) * da + h01 * yb + (h11 * w) * db;
}

// ===========================================================================
// Half-grid cache: pointwise connection data at nodes and midpoints
// ===========================================================================

struct HalfPoint {
  double t = 0.0;
  Vec x;
  Vec v;
  std::shared_ptr<const FrameField> section;
  TwPointData data;
};

std::vector<HalfPoint> build_half_grid(const CurveSolution& sol) {
  const ModelManifold& model = *sol.model;
  const auto& tg = sol.t_grid;
  const int segments = static_cast<int>(tg.size()) - 1;
  std::vector<HalfPoint> out;
  out.reserve(2 * segments + 1);
  auto push = [&](double t) {
    HalfPoint hp;
    hp.t = t;
    hp.x = model.project(sol.position(t));
    hp.v = sol.velocity(t);
    hp.section = model.frame_field(hp.x);
    hp.data = tw_point_data(model, *hp.section, model.make_point(hp.x));
    out.push_back(std::move(hp));
  };
  for (int k = 0; k < segments; ++k) {
    push(tg[k]);
    push(0.5 * (tg[k] + tg[k + 1]));
  }
  push(tg[segments]);
  return out;
}

// Chart-level matrix C(t) with C w = ∇_γ̇ w − ẇ, so that parallel transport
// integrates Ė = −C E column by column.
Mat transport_matrix(const ModelManifold& model, const TwPointData& data,
                     const Vec& v) {
  const int nc = static_cast<int>(data.base.coords.size());
  Mat c(nc, nc);
  Vec e = Vec::Zero(nc);
  const Vec zero = Vec::Zero(nc);
  for (int j = 0; j < nc; ++j) {
    e(j) = 1.0;
    c.col(j) = tw_cov(model, data, v, e, zero);
    e(j) = 0.0;
  }
  return c;
}

// Initial frame columns: for a lengthy curve, γ̇/|γ̇| and J of it lead, the
// remaining horizontal slots come from Gram-Schmidt over the section frame,
// and the Reeb vector closes the list. Otherwise the section frame is used
// as is.
Mat initial_frame(const CurveSolution& sol, const HalfPoint& hp) {
  const TwPointData& d = hp.data;
  const int nc = static_cast<int>(hp.x.size());
  const int nf = sol.model->dim();
  std::vector<Vec> cols;
  cols.reserve(nf);
  const double sp = std::sqrt(std::max(0.0, hp.v.dot(d.g * hp.v)));
  if (sol.lengthy && sp > 1e-12) {
    cols.push_back(hp.v / sp);
    Vec jv = d.j * cols.front();
    const double jn = std::sqrt(std::max(0.0, jv.dot(d.g * jv)));
    if (jn < 1e-12)
      throw NumericError("parallel frame: J of the initial velocity vanished");
    cols.push_back(jv / jn);
    for (int a = 0; a < d.horizontal.cols(); ++a) {
      if (static_cast<int>(cols.size()) == nf - 1) break;
      Vec w = d.horizontal.col(a);
      for (const Vec& c : cols) w -= c.dot(d.g * w) * c;
      const double wn = std::sqrt(std::max(0.0, w.dot(d.g * w)));
      if (wn > 0.3) cols.push_back(w / wn);
    }
    if (static_cast<int>(cols.size()) != nf - 1)
      throw NumericError(
          "parallel frame: could not complete the initial horizontal frame");
  } else {
    for (int a = 0; a < d.horizontal.cols(); ++a)
      cols.push_back(d.horizontal.col(a));
  }
  Mat e0(nc, nf);
  for (int j = 0; j < nf - 1; ++j) e0.col(j) = cols[j];
  e0.col(nf - 1) = d.reeb;
  return e0;
}

ParallelFrame build_frame(const CurveSolution& sol,
                          const std::vector<HalfPoint>& hg) {
  const ModelManifold& model = *sol.model;
  const int nf = model.dim();
  const int segments = static_cast<int>(sol.t_grid.size()) - 1;

  ParallelFrame pf;
  pf.t_grid = sol.t_grid;
  pf.frames.resize(2 * segments + 1);
  pf.frames[0] = initial_frame(sol, hg.front());

  // RK4 on Ė = −C(t) E over each half step, with C at the half-step
  // midpoint (a quarter point of the curve grid) evaluated on the fly.
  for (int i = 0; i < 2 * segments; ++i) {
    const HalfPoint& pa = hg[i];
    const HalfPoint& pb = hg[i + 1];
    const double h2 = pb.t - pa.t;
    const double tq = 0.5 * (pa.t + pb.t);
    const Vec xq = model.project(sol.position(tq));
    const Vec vq = sol.velocity(tq);
    const auto sq = model.frame_field(xq);
    const TwPointData dq = tw_point_data(model, *sq, model.make_point(xq));
    const Mat ca = transport_matrix(model, pa.data, pa.v);
    const Mat cq = transport_matrix(model, dq, vq);
    const Mat cb = transport_matrix(model, pb.data, pb.v);
    const Mat& e = pf.frames[i];
    const Mat k1 = -(ca * e);
    const Mat k2 = -(cq * (e + (0.5 * h2) * k1));
    const Mat k3 = -(cq * (e + (0.5 * h2) * k2));
    const Mat k4 = -(cb * (e + h2 * k3));
    pf.frames[i + 1] = e + (h2 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  Mat j0;
  for (int k = 0; k <= segments; ++k) {
    const Mat& e = pf.frames[2 * k];
    const TwPointData& d = hg[2 * k].data;
    const Mat gram = e.transpose() * d.g * e;
    pf.gram_drift = std::max(
        pf.gram_drift,
        (gram - Mat::Identity(nf, nf)).cwiseAbs().maxCoeff());
    const Mat jf = e.transpose() * d.g * (d.j * e);
    if (k == 0)
      j0 = jf;
    else
      pf.j_drift = std::max(pf.j_drift, (jf - j0).cwiseAbs().maxCoeff());
  }
  return pf;
}

// ===========================================================================
// Jacobi equation right-hand side on the cached coefficients
// ===========================================================================

// ü = 2 |γ̇| u̇_2 e_T − u̇_T s − u_T r − m u at half-grid index ci.
Vec jacobi_rhs(const JacobiWorkspace& ws, int ci, const Vec& u,
               const Vec& du) {
  const int nf = ws.dim;
  Vec dd = -(ws.m[ci] * u);
  if (!ws.sasakian) {
    dd.noalias() -= du(nf - 1) * ws.s[ci];
    dd.noalias() -= u(nf - 1) * ws.r[ci];
  }
  dd(nf - 1) += 2.0 * ws.speed * du(1);
  return dd;
}

// RK4 for the second-order linear system on the curve's grid, coefficients
// at nodes and midpoints. Fills node samples of u, u̇, and the ü the
// equation induces.
void integrate_core(const JacobiWorkspace& ws, const Vec& u0, const Vec& du0,
                    Mat& u, Mat& du, Mat& ddu) {
  const int nf = ws.dim;
  const int segments = ws.nodes() - 1;
  u.resize(nf, segments + 1);
  du.resize(nf, segments + 1);
  ddu.resize(nf, segments + 1);
  Vec cu = u0;
  Vec cdu = du0;
  u.col(0) = cu;
  du.col(0) = cdu;
  ddu.col(0) = jacobi_rhs(ws, 0, cu, cdu);
  for (int k = 0; k < segments; ++k) {
    const double h = ws.sol.t_grid[k + 1] - ws.sol.t_grid[k];
    const int ia = 2 * k;
    const int im = 2 * k + 1;
    const int ib = 2 * k + 2;
    const Vec k1u = cdu;
    const Vec k1d = jacobi_rhs(ws, ia, cu, cdu);
    const Vec u2 = cu + (0.5 * h) * k1u;
    const Vec d2 = cdu + (0.5 * h) * k1d;
    const Vec k2u = d2;
    const Vec k2d = jacobi_rhs(ws, im, u2, d2);
    const Vec u3 = cu + (0.5 * h) * k2u;
    const Vec d3 = cdu + (0.5 * h) * k2d;
    const Vec k3u = d3;
    const Vec k3d = jacobi_rhs(ws, im, u3, d3);
    const Vec u4 = cu + h * k3u;
    const Vec d4 = cdu + h * k3d;
    const Vec k4u = d4;
    const Vec k4d = jacobi_rhs(ws, ib, u4, d4);
    cu += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    cdu += (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    u.col(k + 1) = cu;
    du.col(k + 1) = cdu;
    ddu.col(k + 1) = jacobi_rhs(ws, ib, cu, cdu);
  }
}

// Wraps integrated node data as a single-piece field over the full domain.
JacobiField wrap_field(const JacobiWorkspace& ws, const Vec& u0,
                       const Vec& du0, Mat&& u, Mat&& du, Mat&& ddu) {
  JacobiField f;
  f.t_grid = ws.sol.t_grid;
  FieldPiece p;
  p.lo = ws.t0();
  p.hi = ws.t1();
  p.k0 = 0;
  p.u = std::move(u);
  p.du = std::move(du);
  p.ddu = std::move(ddu);
  f.pieces.push_back(std::move(p));
  f.seed_u = u0;
  f.seed_du = du0;
  f.residual = jacobi_residual(ws, f);
  return f;
}

}  // namespace

// ===========================================================================
// Parallel frame and workspace construction
// ===========================================================================

ParallelFrame parallel_frame(const CurveSolution& sol) {
  require(sol.model != nullptr, "parallel_frame: curve carries no model");
  require(sol.nodes() >= 2, "parallel_frame: need at least two nodes");
  const auto hg = build_half_grid(sol);
  return build_frame(sol, hg);
}

JacobiWorkspace make_jacobi_workspace(const CurveSolution& sol) {
  require(sol.model != nullptr, "jacobi workspace: curve carries no model");
  require(sol.nodes() >= 5, "jacobi workspace: need at least five nodes");
  require(sol.lengthy,
          "jacobi workspace: the curve must be a lengthy geodesic");
  if (!sol.b.empty()) {
    double bmax = 0.0;
    for (double bv : sol.b) bmax = std::max(bmax, std::abs(bv));
    require(bmax < 1e-10,
            "jacobi workspace: the curve's multiplier channel must vanish "
            "(connection geodesic)");
  }

  JacobiWorkspace ws;
  ws.sol = sol;
  const ModelManifold& model = *ws.sol.model;
  ws.dim = model.dim();
  ws.speed = ws.sol.speed(ws.sol.t0());
  require(std::abs(ws.speed - 1.0) < 1e-6,
          "jacobi workspace: the geodesic must be unit speed");

  const auto hg = build_half_grid(ws.sol);
  ws.frame = build_frame(ws.sol, hg);

  double tau_max = 0.0;
  for (const HalfPoint& hp : hg)
    tau_max = std::max(tau_max, hp.data.tau_coord.cwiseAbs().maxCoeff());
  ws.sasakian = tau_max < 1e-12;

  const int hn = static_cast<int>(hg.size());
  const int nf = ws.dim;
  ws.m.resize(hn);
  ws.a_vv.resize(hn);
  if (!ws.sasakian) {
    ws.s.resize(hn);
    ws.r.resize(hn);
  }
  for (int i = 0; i < hn; ++i) {
    const HalfPoint& hp = hg[i];
    const TwPointData& d = hp.data;
    const Mat& e = ws.frame.frames[i];
    // Section-frame components of the parallel columns and of γ̇, for the
    // curvature sample taken at the same section.
    Mat f(nf, nf);
    for (int c = 0; c < nf; ++c) {
      f.col(c).head(nf - 1) = d.frame_components(e.col(c));
      f(nf - 1, c) = d.theta.dot(e.col(c));
    }
    Vec vf(nf);
    vf.head(nf - 1) = d.frame_components(hp.v);
    vf(nf - 1) = d.theta.dot(hp.v);
    const CurvatureSample sample =
        curvature_sample(model, *hp.section, model.make_point(hp.x));
    Mat mm(nf, nf);
    for (int a = 0; a < nf; ++a) {
      const Vec ra = sample.apply(f.col(a), vf, vf);
      mm.col(a) = f.transpose() * ra;
    }
    ws.m[i] = mm;
    ws.a_vv[i] = d.a(hp.v, hp.v);
    if (!ws.sasakian) {
      ws.s[i] = e.transpose() * (d.g * (d.tau_coord * hp.v));
      const Vec dtau = tw_cov_tau(model, *hp.section, model.make_point(hp.x),
                                  hp.v, hp.v);
      ws.r[i] = e.transpose() * (d.g * dtau);
    }
  }
  return ws;
}

// ===========================================================================
// Field evaluation
// ===========================================================================

namespace {

const FieldPiece& locate_piece(const CurveField& f, double t,
                               bool prefer_left) {
  require(!f.pieces.empty(), "field evaluation: field has no pieces");
  const double eps = 1e-12 * (1.0 + std::abs(t));
  require(t >= f.pieces.front().lo - eps && t <= f.pieces.back().hi + eps,
          "field evaluation: parameter outside the field's domain");
  for (std::size_t i = 0; i < f.pieces.size(); ++i) {
    const FieldPiece& p = f.pieces[i];
    if (t < p.hi - eps) return p;
    if (std::abs(t - p.hi) <= eps) {
      if (prefer_left || i + 1 == f.pieces.size()) return p;
      return f.pieces[i + 1];
    }
  }
  return f.pieces.back();
}

// Interpolates the (val, der) node pairs of one piece at parameter t.
Vec piece_eval(const std::vector<double>& tg, const FieldPiece& p,
               const Mat& val, const Mat& der, double t) {
  const int cols = static_cast<int>(val.cols());
  if (cols == 1) return val.col(0);
  const int kmax = p.k0 + cols - 1;
  int k = static_cast<int>(
              std::upper_bound(tg.begin() + p.k0, tg.begin() + kmax + 1, t) -
              tg.begin()) -
          1;
  k = std::clamp(k, p.k0, kmax - 1);
  const int c = k - p.k0;
  return hermite(t, tg[k], tg[k + 1], val.col(c), der.col(c), val.col(c + 1),
                 der.col(c + 1));
}

}  // namespace

double CurveField::lo() const {
  require(!pieces.empty(), "field has no pieces");
  return pieces.front().lo;
}

double CurveField::hi() const {
  require(!pieces.empty(), "field has no pieces");
  return pieces.back().hi;
}

Vec CurveField::u_at(double t, bool prefer_left) const {
  const FieldPiece& p = locate_piece(*this, t, prefer_left);
  return piece_eval(t_grid, p, p.u, p.du, t);
}

Vec CurveField::du_at(double t, bool prefer_left) const {
  const FieldPiece& p = locate_piece(*this, t, prefer_left);
  return piece_eval(t_grid, p, p.du, p.ddu, t);
}

std::vector<double> CurveField::corners() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
    out.push_back(pieces[i].hi);
  return out;
}

CurveField sample_field(const JacobiWorkspace& ws, double lo, double hi,
                        const std::function<Vec(double)>& u,
                        const std::function<Vec(double)>& du,
                        const std::function<Vec(double)>& ddu) {
  const auto& tg = ws.sol.t_grid;
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  require(lo < hi, "sample_field: empty parameter range");
  require(lo >= ws.t0() - eps && hi <= ws.t1() + eps,
          "sample_field: range outside the curve domain");
  // Node range covering [lo, hi].
  int k0 = static_cast<int>(std::upper_bound(tg.begin(), tg.end(), lo) -
                            tg.begin()) -
           1;
  k0 = std::clamp(k0, 0, static_cast<int>(tg.size()) - 2);
  int k1 = static_cast<int>(std::lower_bound(tg.begin(), tg.end(), hi) -
                            tg.begin());
  k1 = std::clamp(k1, k0 + 1, static_cast<int>(tg.size()) - 1);

  CurveField f;
  f.t_grid = tg;
  FieldPiece p;
  p.lo = std::max(lo, tg.front());
  p.hi = std::min(hi, tg.back());
  p.k0 = k0;
  const int cols = k1 - k0 + 1;
  p.u.resize(ws.dim, cols);
  p.du.resize(ws.dim, cols);
  p.ddu.resize(ws.dim, cols);
  for (int c = 0; c < cols; ++c) {
    const double t = tg[k0 + c];
    p.u.col(c) = u(t);
    p.du.col(c) = du(t);
    p.ddu.col(c) = ddu(t);
  }
  f.pieces.push_back(std::move(p));
  return f;
}

// ===========================================================================
// Integration, residuals, decomposition, first integrals
// ===========================================================================

JacobiField integrate_jacobi(const JacobiWorkspace& ws, const Vec& X0,
                             const Vec& X0p) {
  require(X0.size() == ws.dim && X0p.size() == ws.dim,
          "integrate_jacobi: seed size must match the frame dimension");
  Mat u, du, ddu;
  integrate_core(ws, X0, X0p, u, du, ddu);
  return wrap_field(ws, X0, X0p, std::move(u), std::move(du), std::move(ddu));
}

JacobiField integrate_jacobi(const CurveSolution& sol, const Vec& X0,
                             const Vec& X0p) {
  return integrate_jacobi(make_jacobi_workspace(sol), X0, X0p);
}

double jacobi_residual(const JacobiWorkspace& ws, const CurveField& field) {
  // Fourth-order five-point second difference at interior nodes, compared
  // with the cached right-hand side. Only stencils fully inside one piece
  // and on uniform spacing participate.
  const auto& tg = ws.sol.t_grid;
  double res = 0.0;
  for (const FieldPiece& p : field.pieces) {
    const int cols = static_cast<int>(p.u.cols());
    for (int c = 2; c <= cols - 3; ++c) {
      const int k = p.k0 + c;
      const double h = tg[k] - tg[k - 1];
      bool uniform = h > 0.0;
      for (int j = -2; j < 2 && uniform; ++j)
        if (std::abs((tg[k + j + 1] - tg[k + j]) - h) > 1e-12 * (1.0 + h))
          uniform = false;
      if (!uniform) continue;
      const Vec num = -p.u.col(c - 2) + 16.0 * p.u.col(c - 1) -
                      30.0 * p.u.col(c) + 16.0 * p.u.col(c + 1) -
                      p.u.col(c + 2);
      const Vec dd = num / (12.0 * h * h);
      const Vec rhs = jacobi_rhs(ws, 2 * k, p.u.col(c), p.du.col(c));
      res = std::max(res, (dd - rhs).cwiseAbs().maxCoeff());
    }
  }
  return res;
}

double reduced_jacobi_residual(const JacobiWorkspace& ws,
                               const CurveField& field) {
  const auto& tg = ws.sol.t_grid;
  const int nh = ws.dim - 1;
  double res = 0.0;
  for (const FieldPiece& p : field.pieces) {
    const int cols = static_cast<int>(p.u.cols());
    for (int c = 2; c <= cols - 3; ++c) {
      const int k = p.k0 + c;
      const double h = tg[k] - tg[k - 1];
      bool uniform = h > 0.0;
      for (int j = -2; j < 2 && uniform; ++j)
        if (std::abs((tg[k + j + 1] - tg[k + j]) - h) > 1e-12 * (1.0 + h))
          uniform = false;
      if (!uniform) continue;
      const Vec num = -p.u.col(c - 2).head(nh) + 16.0 * p.u.col(c - 1).head(nh) -
                      30.0 * p.u.col(c).head(nh) +
                      16.0 * p.u.col(c + 1).head(nh) - p.u.col(c + 2).head(nh);
      const Vec dd = num / (12.0 * h * h);
      const Vec rhs =
          -(ws.m[2 * k].topLeftCorner(nh, nh) * p.u.col(c).head(nh));
      res = std::max(res, (dd - rhs).cwiseAbs().maxCoeff());
    }
  }
  return res;
}

JacobiSplit decompose(const JacobiWorkspace& ws, const JacobiField& field) {
  require(field.pieces.size() == 1 && field.pieces.front().k0 == 0 &&
              static_cast<int>(field.pieces.front().u.cols()) == ws.nodes(),
          "decompose: expected a field over the whole curve domain");
  const FieldPiece& p = field.pieces.front();
  const double scale = std::max(1.0, p.u.cwiseAbs().maxCoeff());
  const double res = jacobi_residual(ws, field);
  require_domain(res <= 1e-6 * scale,
                 "decompose: the field does not satisfy the Jacobi equation");

  const int nf = ws.dim;
  const auto& tg = ws.sol.t_grid;
  const double r = ws.speed;
  // X = (a + b (t − t₀)) γ̇ + Y with g(Y, γ̇)(t₀) = 0 and Y's tangential
  // first integral zero.
  const double a = p.u(0, 0) / r;
  const double b =
      (r * p.du(0, 0) + p.u(nf - 1, 0) * ws.a_vv[0]) / (r * r);

  JacobiSplit out;
  out.a = a;
  out.b = b;
  out.y = field;
  FieldPiece& q = out.y.pieces.front();
  for (int k = 0; k < ws.nodes(); ++k) {
    q.u(0, k) -= r * (a + b * (tg[k] - tg[0]));
    q.du(0, k) -= r * b;
  }
  out.y.seed_u = q.u.col(0);
  out.y.seed_du = q.du.col(0);
  out.y.residual = jacobi_residual(ws, out.y);

  // g(Y, γ̇)(t) + ∫ θ(Y) A(γ̇, γ̇) should vanish identically; track the
  // worst node deviation with cumulative Simpson over the half grid.
  double cum = 0.0;
  double slant = std::abs(r * q.u(0, 0));
  for (int k = 0; k + 1 < ws.nodes(); ++k) {
    const double h = tg[k + 1] - tg[k];
    const double f0 = q.u(nf - 1, k) * ws.a_vv[2 * k];
    const double tmid = 0.5 * (tg[k] + tg[k + 1]);
    const Vec umid = hermite(tmid, tg[k], tg[k + 1], q.u.col(k), q.du.col(k),
                             q.u.col(k + 1), q.du.col(k + 1));
    const double fm = umid(nf - 1) * ws.a_vv[2 * k + 1];
    const double f1 = q.u(nf - 1, k + 1) * ws.a_vv[2 * k + 2];
    cum += (h / 6.0) * (f0 + 4.0 * fm + f1);
    slant = std::max(slant, std::abs(r * q.u(0, k + 1) + cum));
  }
  out.slant_residual = slant;
  return out;
}

JacobiSplit decompose(const CurveSolution& sol, const JacobiField& field) {
  return decompose(make_jacobi_workspace(sol), field);
}

JacobiConstants jacobi_constants(const JacobiWorkspace& ws,
                                 const CurveField& field) {
  const int nf = ws.dim;
  const double r = ws.speed;
  std::vector<double> c1, c2;
  for (const FieldPiece& p : field.pieces) {
    const int cols = static_cast<int>(p.u.cols());
    for (int c = 0; c < cols; ++c) {
      const int k = p.k0 + c;
      c1.push_back(r * p.du(0, c) + p.u(nf - 1, c) * ws.a_vv[2 * k]);
      c2.push_back(p.du(nf - 1, c) - 2.0 * r * p.u(1, c));
    }
  }
  require(!c1.empty(), "jacobi_constants: field has no node samples");
  auto track = [](const std::vector<double>& vals) {
    TrackedConstant tc;
    double sum = 0.0;
    for (double v : vals) sum += v;
    tc.value = sum / static_cast<double>(vals.size());
    for (double v : vals)
      tc.drift = std::max(tc.drift, std::abs(v - tc.value));
    return tc;
  };
  JacobiConstants out;
  out.tangential = track(c1);
  out.contact = track(c2);
  return out;
}

JacobiConstants jacobi_constants(const CurveSolution& sol,
                                 const JacobiField& field) {
  return jacobi_constants(make_jacobi_workspace(sol),
                          static_cast<const CurveField&>(field));
}

// ===========================================================================
// Fundamental systems and family linear algebra
// ===========================================================================

namespace {

// Linear combination of same-shape full-domain fields.
JacobiField combine_fields(const JacobiWorkspace& ws,
                           const std::vector<JacobiField>& basis,
                           const Vec& z) {
  const FieldPiece& p0 = basis.front().pieces.front();
  Mat u = Mat::Zero(p0.u.rows(), p0.u.cols());
  Mat du = u;
  Mat ddu = u;
  Vec su = Vec::Zero(ws.dim);
  Vec sdu = Vec::Zero(ws.dim);
  for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
    const FieldPiece& p = basis[i].pieces.front();
    u += z(i) * p.u;
    du += z(i) * p.du;
    ddu += z(i) * p.ddu;
    su += z(i) * basis[i].seed_u;
    sdu += z(i) * basis[i].seed_du;
  }
  return wrap_field(ws, su, sdu, std::move(u), std::move(du), std::move(ddu));
}

// The 2n+1 fields seeded by X(t₀) = 0, X′(t₀) = e_c.
std::vector<JacobiField> velocity_seeded(const JacobiWorkspace& ws) {
  std::vector<JacobiField> out;
  out.reserve(ws.dim);
  const Vec zero = Vec::Zero(ws.dim);
  for (int c = 0; c < ws.dim; ++c) {
    Vec e = Vec::Zero(ws.dim);
    e(c) = 1.0;
    out.push_back(integrate_jacobi(ws, zero, e));
  }
  return out;
}

// All 2(2n+1) canonical seeds: positions first, then velocities.
std::vector<JacobiField> full_system(const JacobiWorkspace& ws) {
  std::vector<JacobiField> out;
  out.reserve(2 * ws.dim);
  const Vec zero = Vec::Zero(ws.dim);
  for (int c = 0; c < ws.dim; ++c) {
    Vec e = Vec::Zero(ws.dim);
    e(c) = 1.0;
    out.push_back(integrate_jacobi(ws, e, zero));
  }
  for (int c = 0; c < ws.dim; ++c) {
    Vec e = Vec::Zero(ws.dim);
    e(c) = 1.0;
    out.push_back(integrate_jacobi(ws, zero, e));
  }
  return out;
}

Mat family_values(const std::vector<JacobiField>& fam, double t) {
  Mat v(fam.front().seed_u.size(), static_cast<Eigen::Index>(fam.size()));
  for (int i = 0; i < static_cast<int>(fam.size()); ++i)
    v.col(i) = fam[i].u_at(t);
  return v;
}

Mat family_values_node(const std::vector<JacobiField>& fam, int k) {
  Mat v(fam.front().seed_u.size(), static_cast<Eigen::Index>(fam.size()));
  for (int i = 0; i < static_cast<int>(fam.size()); ++i)
    v.col(i) = fam[i].pieces.front().u.col(k);
  return v;
}

std::pair<double, double> sv_extremes(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& sv = svd.singularValues();
  return {sv(sv.size() - 1), sv(0)};
}

// Basis of the solution subspace vanishing at parameter a, as combinations
// of the full fundamental system.
std::vector<JacobiField> based_family(const JacobiWorkspace& ws,
                                      const std::vector<JacobiField>& full,
                                      double a) {
  const Mat va = family_values(full, a);
  Eigen::JacobiSVD<Mat> svd(va, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  int rank = 0;
  const double smax = sv.size() ? sv(0) : 0.0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-8 * std::max(smax, 1e-300)) ++rank;
  const int total = static_cast<int>(full.size());
  std::vector<JacobiField> out;
  for (int i = rank; i < total; ++i)
    out.push_back(combine_fields(ws, full, svd.matrixV().col(i)));
  return out;
}

// Sub-basis of fam whose Reeb component stays below 1e−8 (relative to field
// scale) in sup norm over the nodes of [lo, hi].
std::vector<JacobiField> horizontal_subfamily(
    const JacobiWorkspace& ws, const std::vector<JacobiField>& fam, double lo,
    double hi) {
  const auto& tg = ws.sol.t_grid;
  const int nf = ws.dim;
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  std::vector<int> rows;
  for (int k = 0; k < ws.nodes(); ++k)
    if (tg[k] >= lo - eps && tg[k] <= hi + eps) rows.push_back(k);
  Mat w(static_cast<Eigen::Index>(rows.size()),
        static_cast<Eigen::Index>(fam.size()));
  for (int i = 0; i < static_cast<int>(fam.size()); ++i) {
    const Mat& u = fam[i].pieces.front().u;
    for (int rj = 0; rj < static_cast<int>(rows.size()); ++rj)
      w(rj, i) = u(nf - 1, rows[rj]);
  }
  Eigen::JacobiSVD<Mat> svd(w, Eigen::ComputeFullV);
  std::vector<JacobiField> out;
  for (int i = 0; i < svd.matrixV().cols(); ++i) {
    const Vec z = svd.matrixV().col(i);
    JacobiField cand = combine_fields(ws, fam, z);
    const Mat& u = cand.pieces.front().u;
    double sup_t = 0.0;
    double scale = 0.0;
    for (int k : rows) {
      sup_t = std::max(sup_t, std::abs(u(nf - 1, k)));
      scale = std::max(scale, u.col(k).cwiseAbs().maxCoeff());
    }
    if (sup_t < 1e-8 * std::max(1.0, scale)) out.push_back(std::move(cand));
  }
  return out;
}

int nearest_node(const std::vector<double>& tg, double t) {
  int k = static_cast<int>(std::lower_bound(tg.begin(), tg.end(), t) -
                           tg.begin());
  k = std::clamp(k, 0, static_cast<int>(tg.size()) - 1);
  if (k > 0 && std::abs(tg[k - 1] - t) <= std::abs(tg[k] - t)) --k;
  return k;
}

double golden_min(const std::function<double(double)>& f, double lo,
                  double hi, double tol) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

void check_scan_range(const JacobiWorkspace& ws, double t_max) {
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  require(t_max <= ws.t1() + eps,
          "conjugate scan: t_max lies beyond the curve domain");
}

// Curvature matrix linearly interpolated between the two enclosing
// half-grid points.
Mat m_at(const JacobiWorkspace& ws, double t) {
  const auto& tg = ws.sol.t_grid;
  int k = static_cast<int>(std::upper_bound(tg.begin(), tg.end(), t) -
                           tg.begin()) -
          1;
  k = std::clamp(k, 0, static_cast<int>(tg.size()) - 2);
  const double tm = 0.5 * (tg[k] + tg[k + 1]);
  int ia;
  double ta, tb;
  if (t <= tm) {
    ia = 2 * k;
    ta = tg[k];
    tb = tm;
  } else {
    ia = 2 * k + 1;
    ta = tm;
    tb = tg[k + 1];
  }
  const double w =
      (tb > ta) ? std::clamp((t - ta) / (tb - ta), 0.0, 1.0) : 0.0;
  return (1.0 - w) * ws.m[ia] + w * ws.m[ia + 1];
}

// Composite Simpson over the node intervals of [a, b], split additionally at
// the given break parameters. Evaluations at a segment boundary take the
// side pointing into the segment, so corner one-sided derivatives are used
// correctly.
double clipped_simpson(const JacobiWorkspace& ws, double a, double b,
                       std::vector<double> breaks,
                       const std::function<double(double, bool)>& f) {
  const auto& tg = ws.sol.t_grid;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double x, double y) {
                             return std::abs(x - y) < 1e-12;
                           }),
               breaks.end());
  double total = 0.0;
  for (std::size_t bi = 0; bi + 1 < breaks.size(); ++bi) {
    const double lo = std::max(breaks[bi], a);
    const double hi = std::min(breaks[bi + 1], b);
    if (hi - lo < 1e-14) continue;
    for (int k = 0; k + 1 < static_cast<int>(tg.size()); ++k) {
      const double slo = std::max(lo, tg[k]);
      const double shi = std::min(hi, tg[k + 1]);
      if (shi - slo < 1e-14) continue;
      const double smid = 0.5 * (slo + shi);
      const double f0 = f(slo, false);
      const double fm = f(smid, true);
      const double f1 = f(shi, true);
      total += ((shi - slo) / 6.0) * (f0 + 4.0 * fm + f1);
    }
  }
  return total;
}

// Sup norm of one component row (or of all rows when row < 0) over the
// field's node samples inside [lo, hi].
double node_sup(const JacobiWorkspace& ws, const CurveField& field, int row,
                double lo, double hi) {
  const auto& tg = ws.sol.t_grid;
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  double sup = 0.0;
  for (const FieldPiece& p : field.pieces) {
    const int cols = static_cast<int>(p.u.cols());
    for (int c = 0; c < cols; ++c) {
      const double t = tg[p.k0 + c];
      if (t < std::max(lo, p.lo) - eps || t > std::min(hi, p.hi) + eps)
        continue;
      if (row < 0)
        sup = std::max(sup, p.u.col(c).cwiseAbs().maxCoeff());
      else
        sup = std::max(sup, std::abs(p.u(row, c)));
    }
  }
  return sup;
}

}  // namespace

// ===========================================================================
// Conjugate points and dimensions
// ===========================================================================

std::vector<ConjugatePoint> conjugate_points(const JacobiWorkspace& ws,
                                             double t_max) {
  check_scan_range(ws, t_max);
  std::vector<ConjugatePoint> out;
  if (t_max <= ws.t0()) return out;
  const auto fam = velocity_seeded(ws);
  const auto& tg = ws.sol.t_grid;
  const int last = static_cast<int>(tg.size()) - 1;

  auto det_at = [&](double t) { return family_values(fam, t).determinant(); };

  std::vector<double> roots;
  auto push_root = [&](double t) {
    if (roots.empty() || t - roots.back() > 1e-8) roots.push_back(t);
  };
  double prev_t = tg[1];
  double prev_d = family_values_node(fam, 1).determinant();
  if (prev_d == 0.0) push_root(prev_t);
  for (int k = 2; k <= last && prev_t < t_max; ++k) {
    const double cur_t = std::min(tg[k], t_max);
    const double cur_d =
        (cur_t == tg[k]) ? family_values_node(fam, k).determinant()
                         : det_at(cur_t);
    if (cur_d == 0.0) {
      push_root(cur_t);
    } else if (prev_d != 0.0 && ((prev_d < 0.0) != (cur_d < 0.0))) {
      double lo = prev_t;
      double hi = cur_t;
      double flo = prev_d;
      while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        const double fm = det_at(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((flo < 0.0) != (fm < 0.0)) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      push_root(0.5 * (lo + hi));
    }
    prev_t = cur_t;
    prev_d = cur_d;
  }

  for (double t : roots) {
    if (t > t_max + 1e-9) continue;
    const auto [smin, smax] = sv_extremes(family_values(fam, t));
    int mult = 0;
    Eigen::JacobiSVD<Mat> svd(family_values(fam, t));
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) < 1e-6 * std::max(smax, 1e-300)) ++mult;
    out.push_back({t, std::max(mult, 1)});
  }
  return out;
}

std::vector<ConjugatePoint> conjugate_points(const CurveSolution& sol,
                                             double t_max) {
  return conjugate_points(make_jacobi_workspace(sol), t_max);
}

std::vector<double> horizontally_conjugate(const JacobiWorkspace& ws,
                                           double t_max) {
  check_scan_range(ws, t_max);
  std::vector<double> out;
  if (t_max <= ws.t0()) return out;
  const int nf = ws.dim;
  // Horizontally seeded candidates, cut down to the everywhere-horizontal
  // subspace over the full curve domain.
  std::vector<JacobiField> cands;
  const Vec zero = Vec::Zero(nf);
  for (int c = 0; c < nf - 1; ++c) {
    Vec e = Vec::Zero(nf);
    e(c) = 1.0;
    cands.push_back(integrate_jacobi(ws, zero, e));
  }
  const auto horiz = horizontal_subfamily(ws, cands, ws.t0(), ws.t1());
  if (horiz.empty()) return out;

  auto sigma_min = [&](double t) {
    return sv_extremes(family_values(horiz, t)).first;
  };

  const auto& tg = ws.sol.t_grid;
  const int last = static_cast<int>(tg.size()) - 1;
  std::vector<double> ts;
  std::vector<double> sig;
  for (int k = 1; k <= last && tg[k] <= t_max + 1e-12; ++k) {
    ts.push_back(tg[k]);
    sig.push_back(sv_extremes(family_values_node(horiz, k)).first);
  }
  if (ts.size() < 2) return out;
  double global_max = 0.0;
  for (double s : sig) global_max = std::max(global_max, s);
  const double dip = 1e-2 * std::max(global_max, 1e-300);

  auto refine = [&](double lo, double hi) {
    const double t_star = golden_min(sigma_min, lo, hi, 1e-9);
    const auto [smin, smax] = sv_extremes(family_values(horiz, t_star));
    if (smin < 1e-6 * std::max(smax, 1e-300)) {
      if (t_star <= t_max + 1e-9 &&
          (out.empty() || t_star - out.back() > 1e-6))
        out.push_back(t_star);
    }
  };

  const int m = static_cast<int>(ts.size());
  for (int i = 0; i < m; ++i) {
    if (sig[i] >= dip) continue;
    const bool left_ok = (i == 0) ? true : sig[i] <= sig[i - 1];
    const bool right_ok = (i == m - 1) ? true : sig[i] <= sig[i + 1];
    if (!(left_ok && right_ok)) continue;
    const double lo = (i == 0) ? ws.t0() + 1e-12 : ts[i - 1];
    const double hi = (i == m - 1) ? std::min(t_max, ws.t1()) : ts[i + 1];
    if (hi > lo) refine(lo, hi);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> horizontally_conjugate(const CurveSolution& sol,
                                           double t_max) {
  return horizontally_conjugate(make_jacobi_workspace(sol), t_max);
}

namespace {

int trajectory_rank(const std::vector<Mat>& trajs) {
  const int cols = static_cast<int>(trajs.size());
  const Eigen::Index rows = trajs.front().rows() * trajs.front().cols();
  Mat stack(rows, cols);
  for (int i = 0; i < cols; ++i)
    stack.col(i) =
        Eigen::Map<const Vec>(trajs[i].data(), trajs[i].size());
  Eigen::JacobiSVD<Mat> svd(stack);
  const Vec& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-6 * std::max(smax, 1e-300)) ++rank;
  return rank;
}

// RK4 for the reduced horizontal system ü_H + m_H u_H = 0.
Mat reduced_trajectory(const JacobiWorkspace& ws, const Vec& u0,
                       const Vec& du0) {
  const int nh = ws.dim - 1;
  const int segments = ws.nodes() - 1;
  Mat u(nh, segments + 1);
  Vec cu = u0;
  Vec cdu = du0;
  u.col(0) = cu;
  auto rhs = [&](int ci, const Vec& uu) -> Vec {
    return -(ws.m[ci].topLeftCorner(nh, nh) * uu);
  };
  for (int k = 0; k < segments; ++k) {
    const double h = ws.sol.t_grid[k + 1] - ws.sol.t_grid[k];
    const int ia = 2 * k;
    const int im = 2 * k + 1;
    const int ib = 2 * k + 2;
    const Vec k1u = cdu;
    const Vec k1d = rhs(ia, cu);
    const Vec u2 = cu + (0.5 * h) * k1u;
    const Vec k2u = cdu + (0.5 * h) * k1d;
    const Vec k2d = rhs(im, u2);
    const Vec u3 = cu + (0.5 * h) * k2u;
    const Vec k3u = cdu + (0.5 * h) * k2d;
    const Vec k3d = rhs(im, u3);
    const Vec u4 = cu + h * k3u;
    const Vec k4u = cdu + h * k3d;
    const Vec k4d = rhs(ib, u4);
    cu += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    cdu += (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    u.col(k + 1) = cu;
  }
  return u;
}

}  // namespace

int jacobi_dim(const JacobiWorkspace& ws) {
  const auto full = full_system(ws);
  std::vector<Mat> trajs;
  trajs.reserve(full.size());
  for (const JacobiField& f : full) trajs.push_back(f.pieces.front().u);
  return trajectory_rank(trajs);
}

int jacobi_dim(const CurveSolution& sol) {
  return jacobi_dim(make_jacobi_workspace(sol));
}

int horizontal_dim(const JacobiWorkspace& ws) {
  const int nh = ws.dim - 1;
  std::vector<Mat> trajs;
  trajs.reserve(2 * nh);
  const Vec zero = Vec::Zero(nh);
  for (int a = 0; a < nh; ++a) {
    Vec e = Vec::Zero(nh);
    e(a) = 1.0;
    trajs.push_back(reduced_trajectory(ws, e, zero));
  }
  for (int a = 0; a < nh; ++a) {
    Vec e = Vec::Zero(nh);
    e(a) = 1.0;
    trajs.push_back(reduced_trajectory(ws, zero, e));
  }
  return trajectory_rank(trajs);
}

int horizontal_dim(const CurveSolution& sol) {
  return horizontal_dim(make_jacobi_workspace(sol));
}

// ===========================================================================
// Index forms
// ===========================================================================

double index_I_ab(const JacobiWorkspace& ws, const CurveField& x, double a,
                  double b) {
  require(a < b, "index_I_ab: need a < b");
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  require(a >= x.lo() - eps && b <= x.hi() + eps,
          "index_I_ab: the field does not cover [a, b]");
  auto f = [&](double t, bool left) {
    const Vec u = x.u_at(t, left);
    const Vec du = x.du_at(t, left);
    return du.dot(du) - u.dot(m_at(ws, t) * u);
  };
  return clipped_simpson(ws, a, b, x.corners(), f);
}

double index_I_ab(const CurveSolution& sol, const CurveField& x, double a,
                  double b) {
  return index_I_ab(make_jacobi_workspace(sol), x, a, b);
}

double index_form(const JacobiWorkspace& ws, const CurveField& x,
                  const CurveField& y, double a, double b) {
  require(a < b, "index_form: need a < b");
  require(ws.sasakian,
          "index_form: the model must be torsion-free along the curve");
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  require(a >= x.lo() - eps && b <= x.hi() + eps && a >= y.lo() - eps &&
              b <= y.hi() + eps,
          "index_form: the fields do not cover [a, b]");
  const double sx = std::max(1.0, node_sup(ws, x, -1, a, b));
  const double sy = std::max(1.0, node_sup(ws, y, -1, a, b));
  require_domain(
      x.u_at(a, false).cwiseAbs().maxCoeff() <= 1e-8 * sx &&
          x.u_at(b, true).cwiseAbs().maxCoeff() <= 1e-8 * sx,
      "index_form: X must vanish at the endpoints");
  require_domain(
      y.u_at(a, false).cwiseAbs().maxCoeff() <= 1e-8 * sy &&
          y.u_at(b, true).cwiseAbs().maxCoeff() <= 1e-8 * sy,
      "index_form: Y must vanish at the endpoints");

  const int nf = ws.dim;
  const double r = ws.speed;
  auto f = [&](double t, bool left) {
    Vec ux = x.u_at(t, left);
    Vec dux = x.du_at(t, left);
    Vec uy = y.u_at(t, left);
    Vec duy = y.du_at(t, left);
    ux(0) = 0.0;
    dux(0) = 0.0;
    uy(0) = 0.0;
    duy(0) = 0.0;
    const double om_x = r * ux(1);
    const double om_y = r * uy(1);
    return dux.dot(duy) - uy.dot(m_at(ws, t) * ux) -
           2.0 * om_x * duy(nf - 1) -
           2.0 * (dux(nf - 1) - 2.0 * om_x) * om_y;
  };
  std::vector<double> breaks = x.corners();
  const std::vector<double> yc = y.corners();
  breaks.insert(breaks.end(), yc.begin(), yc.end());
  return clipped_simpson(ws, a, b, std::move(breaks), f) / r;
}

double index_form(const CurveSolution& sol, const CurveField& x,
                  const CurveField& y, double a, double b) {
  return index_form(make_jacobi_workspace(sol), x, y, a, b);
}

// ===========================================================================
// Boundary value problems
// ===========================================================================

JacobiField jacobi_bvp(const JacobiWorkspace& ws, double ta, double tb,
                       const Vec& Xa, const Vec& Xb) {
  const int nf = ws.dim;
  require(Xa.size() == nf && Xb.size() == nf,
          "jacobi_bvp: boundary values must match the frame dimension");
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  require(ta < tb && ta >= ws.t0() - eps && tb <= ws.t1() + eps,
          "jacobi_bvp: boundary parameters outside the curve domain");

  const auto full = full_system(ws);
  const int total = static_cast<int>(full.size());
  Mat shoot(2 * nf, total);
  shoot.topRows(nf) = family_values(full, ta);
  shoot.bottomRows(nf) = family_values(full, tb);
  Eigen::JacobiSVD<Mat> svd(shoot,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-8 * std::max(sv(0), 1e-300))
    throw ConjugateIntervalError(
        "jacobi_bvp: the boundary parameters are conjugate (singular "
        "shooting matrix)");
  Vec rhs(2 * nf);
  rhs.head(nf) = Xa;
  rhs.tail(nf) = Xb;
  const Vec z = svd.solve(rhs);
  JacobiField out = combine_fields(ws, full, z);
  const double scale = 1.0 + std::max(Xa.cwiseAbs().maxCoeff(),
                                      Xb.cwiseAbs().maxCoeff());
  if ((out.u_at(ta) - Xa).cwiseAbs().maxCoeff() > 1e-7 * scale ||
      (out.u_at(tb) - Xb).cwiseAbs().maxCoeff() > 1e-7 * scale)
    throw NumericError("jacobi_bvp: shooting verification failed");
  return out;
}

JacobiField jacobi_bvp(const CurveSolution& sol, double ta, double tb,
                       const Vec& Xa, const Vec& Xb) {
  return jacobi_bvp(make_jacobi_workspace(sol), ta, tb, Xa, Xb);
}

// ===========================================================================
// Negative-index construction across a horizontally conjugate pair
// ===========================================================================

BrokenIndexField negative_index_field(const JacobiWorkspace& ws, double a,
                                      double c, double b, double delta) {
  const int nf = ws.dim;
  const auto& tg = ws.sol.t_grid;
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  require(a < c && c < b, "negative_index_field: need a < c < b");
  require(a >= ws.t0() - eps && b <= ws.t1() + eps,
          "negative_index_field: [a, b] outside the curve domain");
  require(delta > 0.0, "negative_index_field: need a positive half-width");
  if (!(a < c - delta && c + delta < b))
    throw HypothesisViolationError(
        "negative_index_field: the window [c − δ, c + δ] must lie inside "
        "(a, b)");
  if (horizontal_dim(ws) != 2 * (nf - 1))
    throw HypothesisViolationError(
        "negative_index_field: the horizontal deviation space is not "
        "maximal");

  // Everywhere-horizontal fields vanishing at a, then the combination that
  // also vanishes at c.
  const auto full = full_system(ws);
  const auto based = based_family(ws, full, a);
  const auto horiz = horizontal_subfamily(ws, based, a, b);
  if (horiz.empty())
    throw HypothesisViolationError(
        "negative_index_field: no horizontal deviation field vanishes at a");
  const Mat vc = family_values(horiz, c);
  Eigen::JacobiSVD<Mat> svd(vc, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const bool singular = static_cast<int>(horiz.size()) > sv.size() ||
                        sv(sv.size() - 1) < 1e-6 * std::max(smax, 1e-300);
  if (!singular)
    throw HypothesisViolationError(
        "negative_index_field: γ(c) is not horizontally conjugate to γ(a)");
  JacobiField y =
      combine_fields(ws, horiz, svd.matrixV().col(svd.matrixV().cols() - 1));

  // Normalize: unit derivative at a, leading component positive.
  Vec dy0 = y.du_at(a, false);
  const double dn = dy0.norm();
  if (dn < 1e-10)
    throw NumericError(
        "negative_index_field: degenerate horizontal field at a");
  int lead = 0;
  dy0.cwiseAbs().maxCoeff(&lead);
  const double sgn = (dy0(lead) >= 0.0) ? 1.0 : -1.0;
  {
    const double factor = sgn / dn;
    FieldPiece& p = y.pieces.front();
    p.u *= factor;
    p.du *= factor;
    p.ddu *= factor;
    y.seed_u *= factor;
    y.seed_du *= factor;
  }
  if (y.u_at(c).cwiseAbs().maxCoeff() >
      1e-6 * std::max(1.0, node_sup(ws, y, -1, a, c)))
    throw HypothesisViolationError(
        "negative_index_field: γ(c) is not horizontally conjugate to γ(a)");

  // Snap the window to grid nodes.
  const int kl = nearest_node(tg, c - delta);
  const int kr = nearest_node(tg, c + delta);
  if (kr - kl < 2)
    throw HypothesisViolationError(
        "negative_index_field: the window is too narrow for the grid");
  const double tl = tg[kl];
  const double tr = tg[kr];
  if (!(a < tl && tr < b))
    throw HypothesisViolationError(
        "negative_index_field: the window [c − δ, c + δ] must lie inside "
        "(a, b)");

  // No conjugate pair may sit strictly inside the window.
  {
    const auto win = based_family(ws, full, tl);
    double prev = 0.0;
    bool have_prev = false;
    for (int k = kl + 1; k <= kr; ++k) {
      const double d = family_values_node(win, k).determinant();
      if (have_prev && prev != 0.0 && d != 0.0 &&
          ((prev < 0.0) != (d < 0.0)) && k < kr)
        throw ConjugateIntervalError(
            "negative_index_field: a conjugate pair lies inside the window");
      prev = d;
      have_prev = true;
    }
  }

  JacobiField z = jacobi_bvp(ws, tl, tr, y.pieces.front().u.col(kl),
                             Vec::Zero(nf));
  {
    double sup_t = 0.0;
    double scale = 0.0;
    const Mat& zu = z.pieces.front().u;
    for (int k = kl; k <= kr; ++k) {
      sup_t = std::max(sup_t, std::abs(zu(nf - 1, k)));
      scale = std::max(scale, zu.col(k).cwiseAbs().maxCoeff());
    }
    if (sup_t > 1e-7 * std::max(1.0, scale))
      throw HypothesisViolationError(
          "negative_index_field: the joining field is not horizontal");
  }

  // Assemble X = Y on [a, t_l], Z on [t_l, t_r], 0 on [t_r, b].
  CurveField x;
  x.t_grid = tg;
  auto slice = [&](const JacobiField& src, int k0, int k1, double lo,
                   double hi) {
    const FieldPiece& s = src.pieces.front();
    FieldPiece p;
    p.lo = lo;
    p.hi = hi;
    p.k0 = k0;
    const int cols = k1 - k0 + 1;
    p.u = s.u.middleCols(k0, cols);
    p.du = s.du.middleCols(k0, cols);
    p.ddu = s.ddu.middleCols(k0, cols);
    return p;
  };
  int ka = static_cast<int>(std::upper_bound(tg.begin(), tg.end(), a) -
                            tg.begin()) -
           1;
  ka = std::clamp(ka, 0, kl - 1);
  int kb = static_cast<int>(std::lower_bound(tg.begin(), tg.end(), b) -
                            tg.begin());
  kb = std::clamp(kb, kr + 1, static_cast<int>(tg.size()) - 1);
  x.pieces.push_back(slice(y, ka, kl, a, tl));
  x.pieces.push_back(slice(z, kl, kr, tl, tr));
  {
    FieldPiece p;
    p.lo = tr;
    p.hi = b;
    p.k0 = kr;
    const int cols = kb - kr + 1;
    p.u = Mat::Zero(nf, cols);
    p.du = Mat::Zero(nf, cols);
    p.ddu = Mat::Zero(nf, cols);
    x.pieces.push_back(std::move(p));
  }

  BrokenIndexField out;
  out.index = index_I_ab(ws, x, a, b);
  out.field = std::move(x);
  out.window_left = tl;
  out.window_right = tr;
  out.smooth_part = std::move(y);
  out.window_part = std::move(z);
  return out;
}

BrokenIndexField negative_index_field(const CurveSolution& sol, double a,
                                      double c, double b, double delta) {
  return negative_index_field(make_jacobi_workspace(sol), a, c, b, delta);
}

// ===========================================================================
// Index comparison against the horizontal Jacobi minimizer
// ===========================================================================

IndexComparison index_comparison(const JacobiWorkspace& ws,
                                 const CurveField& x, const CurveField& y,
                                 double a, double b) {
  const int nf = ws.dim;
  const double eps = 1e-9 * (1.0 + std::abs(ws.t1()));
  require(a < b, "index_comparison: need a < b");
  require(a >= ws.t0() - eps && b <= ws.t1() + eps,
          "index_comparison: [a, b] outside the curve domain");
  require(a >= x.lo() - eps && b <= x.hi() + eps && a >= y.lo() - eps &&
              b <= y.hi() + eps,
          "index_comparison: the fields do not cover [a, b]");
  require_domain(ws.sasakian,
                 "index_comparison: the model is not torsion-free along the "
                 "curve");

  // γ(a) must have no conjugate point on (a, b].
  {
    const auto full = full_system(ws);
    const auto based = based_family(ws, full, a);
    const auto& tg = ws.sol.t_grid;
    double prev = 0.0;
    bool have_prev = false;
    for (int k = 0; k < static_cast<int>(tg.size()); ++k) {
      if (tg[k] <= a + eps || tg[k] > b + eps) continue;
      const double d = family_values_node(based, k).determinant();
      if (have_prev && prev != 0.0 && d != 0.0 &&
          ((prev < 0.0) != (d < 0.0)))
        throw std::domain_error(
            "index_comparison: γ(a) has a conjugate point in (a, b]");
      prev = d;
      have_prev = true;
    }
    const auto [smin, smax] = sv_extremes(family_values(based, b));
    if (smin < 1e-6 * std::max(smax, 1e-300))
      throw std::domain_error(
          "index_comparison: γ(a) has a conjugate point in (a, b]");
  }

  const double sy = std::max(1.0, node_sup(ws, y, -1, a, b));
  const double sx = std::max(1.0, node_sup(ws, x, -1, a, b));
  if (jacobi_residual(ws, y) > 1e-6 * sy)
    throw std::domain_error("index_comparison: Y is not a Jacobi field");
  if (node_sup(ws, y, nf - 1, a, b) > 1e-6 * sy)
    throw std::domain_error("index_comparison: Y is not horizontal");
  if (y.u_at(a, false).cwiseAbs().maxCoeff() > 1e-6 * sy)
    throw std::domain_error("index_comparison: Y does not vanish at a");
  if (node_sup(ws, y, 0, a, b) > 1e-6 * sy)
    throw std::domain_error(
        "index_comparison: Y is not perpendicular to the geodesic");
  if (x.u_at(a, false).cwiseAbs().maxCoeff() > 1e-6 * sx)
    throw std::domain_error("index_comparison: X does not vanish at a");
  if (node_sup(ws, x, 0, a, b) > 1e-6 * sx)
    throw std::domain_error(
        "index_comparison: X is not perpendicular to the geodesic");
  if ((x.u_at(b, true) - y.u_at(b, true)).cwiseAbs().maxCoeff() >
      1e-6 * std::max(sx, sy))
    throw std::domain_error("index_comparison: X and Y do not agree at b");

  IndexComparison out;
  out.i_x = index_I_ab(ws, x, a, b);
  out.i_y = index_I_ab(ws, y, a, b);
  out.inequality_holds = out.i_x >= out.i_y - 1e-8;
  out.equal_within_tol = std::abs(out.i_x - out.i_y) <= 1e-8;

  // Node-level distance between the fields over [a, b].
  double dist = 0.0;
  const auto& tg = ws.sol.t_grid;
  for (int k = 0; k < static_cast<int>(tg.size()); ++k) {
    const double t = tg[k];
    if (t < a - eps || t > b + eps) continue;
    dist = std::max(
        dist, (x.u_at(t) - y.u_at(t)).cwiseAbs().maxCoeff());
  }
  out.fields_match = dist < 1e-6 * std::max(sx, sy);
  return out;
}

IndexComparison index_comparison(const CurveSolution& sol,
                                 const CurveField& x, const CurveField& y,
                                 double a, double b) {
  return index_comparison(make_jacobi_workspace(sol), x, y, a, b);
}

}  // namespace pseudoherm
