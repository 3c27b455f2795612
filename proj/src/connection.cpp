#include "pseudoherm/connection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "pseudoherm/numerics.hpp"

namespace pseudoherm {
namespace {

// ===========================================================================
// Frame bundle: frame matrix, derivatives, brackets, structure constants
// ===========================================================================

struct FrameBundle {
  Mat full;                 // chart_dim × N, columns e_0..e_{2n−1}, T
  std::vector<Mat> d_full;  // d_full[a](i, j) = ∂_j e_a^i
  Mat g;                    // chart-level metric
  Vec theta;
  Mat j_coord;
  Mat j_frame;              // N × N components of J in the frame
  std::vector<Mat> c;       // c[a](b, d) = g([e_a, e_b], e_d)
};

FrameBundle frame_bundle(const ModelManifold& model, const FrameField& section,
                         const Vec& x) {
  const int N = model.dim();
  FrameBundle fb;
  FrameJet jet = section.jet(x);

  fb.full.resize(x.size(), N);
  fb.full.leftCols(N - 1) = jet.horizontal;
  fb.full.col(N - 1) = jet.reeb;

  fb.d_full = std::move(jet.d_horizontal);
  fb.d_full.push_back(std::move(jet.d_reeb));

  fb.g = model.metric_matrix(x);
  fb.theta = model.theta(x);
  fb.j_coord = model.j_coord(x);
  fb.j_frame = fb.full.transpose() * fb.g * (fb.j_coord * fb.full);

  // Structure constants from the frame jets. In a g-orthonormal frame the
  // components of a tangent vector are its g-inner products with the frame.
  fb.c.assign(N, Mat::Zero(N, N));
  for (int a = 0; a < N; ++a) {
    for (int b = a + 1; b < N; ++b) {
      const Vec bracket =
          fb.d_full[b] * fb.full.col(a) - fb.d_full[a] * fb.full.col(b);
      const Vec comps = fb.full.transpose() * (fb.g * bracket);
      fb.c[a].row(b) = comps.transpose();
      fb.c[b].row(a) = -comps.transpose();
    }
  }
  return fb;
}

void check_frame_gram(const ModelManifold& model, const FrameBundle& fb) {
  const Mat gram = fb.full.transpose() * fb.g * fb.full;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  if (es.eigenvalues().minCoeff() < 1e-8) {
    throw DegenerateMetricError(
        "frame Gram matrix is numerically singular on model " + model.id());
  }
}

// Koszul formula in a g-orthonormal frame: only the bracket terms survive.
std::vector<Mat> koszul_gamma(const FrameBundle& fb) {
  const int N = static_cast<int>(fb.c.size());
  std::vector<Mat> gamma(N, Mat::Zero(N, N));
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int cc = 0; cc < N; ++cc)
        gamma[a](b, cc) =
            0.5 * (fb.c[a](b, cc) - fb.c[a](cc, b) - fb.c[b](cc, a));
  return gamma;
}

// Residual of metric compatibility in an orthonormal frame:
// Γ_{abc} + Γ_{acb} = 0.
double metricity_residual(const std::vector<Mat>& gamma) {
  double worst = 0.0;
  for (const Mat& ga : gamma)
    worst = std::max(worst, (ga + ga.transpose()).cwiseAbs().maxCoeff());
  return worst;
}

AdaptedFrame frame_struct(const ModelManifold& model, const FrameBundle& fb,
                          const ChartPoint& x) {
  AdaptedFrame frame;
  frame.base = x;
  const int N = model.dim();
  frame.horizontal.reserve(N - 1);
  for (int a = 0; a < N - 1; ++a)
    frame.horizontal.push_back(model.make_tangent(x.coords, fb.full.col(a)));
  frame.reeb = model.make_tangent(x.coords, fb.full.col(N - 1));
  frame.j_matrix = fb.j_frame;
  frame.g_matrix = fb.full.transpose() * fb.g * fb.full;
  return frame;
}

void check_point(const ModelManifold& model, const ChartPoint& x) {
  require(x.coords.size() == model.chart_dim(),
          "point has wrong chart dimension for model " + model.id());
  require(x.model_id == model.id(),
          "point belongs to model " + x.model_id + ", not " + model.id());
}

void check_tangent(const ModelManifold& model, const ChartPoint& x,
                   const Tangent& u, const std::string& name) {
  require(u.components.size() == model.chart_dim(),
          name + " has wrong chart dimension for model " + model.id());
  require(u.base.model_id == x.model_id &&
              (u.base.coords - x.coords).cwiseAbs().maxCoeff() < 1e-12,
          name + " is not based at the evaluation point");
}

// Torsion components A(e_a, e_b) = Ω(e_a, e_b) − g(D_{e_a} e_b, T) on the
// horizontal frame.
Mat extract_tau(const FrameBundle& fb, const std::vector<Mat>& gamma_d) {
  const int N = static_cast<int>(fb.c.size());
  const int h = N - 1;
  Mat a = Mat::Zero(h, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j)
      a(i, j) = fb.j_frame(i, j) - gamma_d[i](j, N - 1);
  return a;
}

TwPointData point_data_from_bundle(const ModelManifold& model,
                                   const FrameBundle& fb, const ChartPoint& x,
                                   const Mat& a_frame) {
  TwPointData data;
  data.base = x;
  data.theta = fb.theta;
  data.reeb = fb.full.col(model.dim() - 1);
  data.j = fb.j_coord;
  data.g = fb.g;
  data.horizontal = fb.full.leftCols(model.dim() - 1);
  data.a_frame = a_frame;
  data.tau_coord =
      data.horizontal * a_frame * data.horizontal.transpose() * fb.g;
  return data;
}

// ===========================================================================
// Tanaka-Webster construction
// ===========================================================================

struct TwBuild {
  FrameBundle fb;
  std::vector<Mat> gamma;  // Tanaka-Webster coefficients
  Mat a_frame;
  TwPointData data;
  std::map<std::string, double> residuals;
};

TwBuild tw_build(const ModelManifold& model, const FrameField& section,
                 const ChartPoint& x) {
  TwBuild out;
  out.fb = frame_bundle(model, section, x.coords);
  check_frame_gram(model, out.fb);
  const int N = model.dim();
  const int h = N - 1;

  const std::vector<Mat> gamma_d = koszul_gamma(out.fb);
  out.a_frame = extract_tau(out.fb, gamma_d);
  out.data = point_data_from_bundle(model, out.fb, x, out.a_frame);

  // Coefficients of ∇ from the coordinate-level inversion of
  // D = ∇ + (Ω − A) ⊗ T + τ ⊗ θ + 2 θ ⊙ J.
  out.gamma.assign(N, Mat::Zero(N, N));
  for (int a = 0; a < N; ++a) {
    const Vec u = out.fb.full.col(a);
    for (int b = 0; b < N; ++b) {
      const Vec dV_du = out.fb.d_full[b] * u;
      const Vec cov = tw_cov(model, out.data, u, out.fb.full.col(b), dV_du);
      const Vec comps = out.fb.full.transpose() * (out.fb.g * cov);
      out.gamma[a].row(b) = comps.transpose();
    }
  }

  // Axiom residuals.
  auto& res = out.residuals;
  res["nabla_g"] = metricity_residual(out.gamma);

  double nabla_j = 0.0;
  for (int a = 0; a < N; ++a) {
    const Mat ga_t = out.gamma[a].transpose();
    nabla_j = std::max(
        nabla_j,
        (ga_t * out.fb.j_frame - out.fb.j_frame * ga_t).cwiseAbs().maxCoeff());
  }
  res["nabla_j"] = nabla_j;

  double nabla_theta = 0.0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < h; ++b)
      nabla_theta = std::max(nabla_theta, std::abs(out.gamma[a](b, N - 1)));
  res["nabla_theta"] = nabla_theta;

  double nabla_reeb = 0.0;
  for (int a = 0; a < N; ++a)
    nabla_reeb =
        std::max(nabla_reeb, out.gamma[a].row(N - 1).cwiseAbs().maxCoeff());
  res["nabla_reeb"] = nabla_reeb;

  // Torsion purity on H × H: T_∇(X, Y) = −2 Ω(X, Y) T.
  double purity = 0.0;
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < h; ++b)
      for (int cc = 0; cc < N; ++cc) {
        double t_comp =
            out.gamma[a](b, cc) - out.gamma[b](a, cc) - out.fb.c[a](b, cc);
        if (cc == N - 1) t_comp += 2.0 * out.fb.j_frame(a, b);
        purity = std::max(purity, std::abs(t_comp));
      }
  res["torsion_purity"] = purity;

  // Torsion orientation on the Reeb slot: T_∇(T, X) = τ X.
  double orient = 0.0;
  for (int b = 0; b < h; ++b)
    for (int cc = 0; cc < N; ++cc) {
      double t_comp = out.gamma[N - 1](b, cc) - out.gamma[b](N - 1, cc) -
                      out.fb.c[N - 1](b, cc);
      const double target = (cc < h) ? out.a_frame(b, cc) : 0.0;
      orient = std::max(orient, std::abs(t_comp - target));
    }
  res["tau_orientation"] = orient;

  res["tau_symmetric"] =
      (out.a_frame - out.a_frame.transpose()).cwiseAbs().maxCoeff();
  const Mat j_h = out.fb.j_frame.topLeftCorner(h, h);
  res["tau_j_anticommute"] =
      (out.a_frame * j_h + j_h * out.a_frame).cwiseAbs().maxCoeff();

  return out;
}

ConnectionData connection_from_build(const ModelManifold& model,
                                     const ChartPoint& x, TwBuild&& build) {
  ConnectionData conn;
  conn.base = x;
  conn.frame = frame_struct(model, build.fb, x);
  conn.gamma = std::move(build.gamma);
  conn.tau_matrix = std::move(build.a_frame);
  conn.axiom_residuals = std::move(build.residuals);
  return conn;
}

// ===========================================================================
// Curvature assembly
// ===========================================================================

using GammaProvider = std::function<std::vector<Mat>(const Vec&)>;

std::vector<Mat> tw_gamma_at(const ModelManifold& model,
                             const FrameField& section, const Vec& coords) {
  ChartPoint p{coords, model.id()};
  return tw_build(model, section, p).gamma;
}

std::vector<Mat> lc_gamma_at(const ModelManifold& model,
                             const FrameField& section, const Vec& coords) {
  return koszul_gamma(frame_bundle(model, section, coords));
}

void fill_derived(CurvatureSample& sample) {
  const int N = sample.dim;
  const int h = N - 1;
  sample.sectional_pairs = Mat::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      Vec ei = Vec::Zero(N), ej = Vec::Zero(N);
      ei[i] = 1.0;
      ej[j] = 1.0;
      sample.sectional_pairs(i, j) = sectional(sample, ei, ej);
    }
  sample.ricci_h = Mat::Zero(h, h);
  for (int a = 0; a < h; ++a)
    for (int b = a; b < h; ++b) {
      double sum = 0.0;
      for (int i = 0; i < h; ++i) {
        // g(R(e_i, e_a) e_b, e_i), symmetrized in (a, b).
        sum += 0.5 * (sample.op(i, a)(i, b) + sample.op(i, b)(i, a));
      }
      sample.ricci_h(a, b) = sum;
      sample.ricci_h(b, a) = sum;
    }
}

CurvatureSample assemble_curvature(const ModelManifold& model,
                                   const FrameField& section,
                                   const ChartPoint& x,
                                   const GammaProvider& gamma_at) {
  const int N = model.dim();
  const int cd = model.chart_dim();
  FrameBundle fb = frame_bundle(model, section, x.coords);
  check_frame_gram(model, fb);
  const std::vector<Mat> gamma0 = gamma_at(x.coords);

  // Coordinate derivatives of the coefficients by Richardson-extrapolated
  // central differences over the single smooth frame section.
  std::vector<std::vector<Mat>> d_gamma(cd);
  for (int i = 0; i < cd; ++i) {
    const double h = fd_step(x.coords[i], model.fd_step_scale());
    auto diff_at = [&](double step) {
      Vec xp = x.coords, xm = x.coords;
      xp[i] += step;
      xm[i] -= step;
      std::vector<Mat> gp, gm;
      try {
        gp = gamma_at(xp);
        gm = gamma_at(xm);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "curvature derivative evaluation failed on model " << model.id()
           << " at coordinate " << i << " (step " << step << "): " << e.what();
        throw NumericError(os.str());
      }
      std::vector<Mat> d(N);
      for (int a = 0; a < N; ++a) d[a] = (gp[a] - gm[a]) / (2.0 * step);
      return d;
    };
    const std::vector<Mat> coarse = diff_at(h);
    const std::vector<Mat> fine = diff_at(0.5 * h);
    d_gamma[i].resize(N);
    for (int a = 0; a < N; ++a)
      d_gamma[i][a] = (4.0 * fine[a] - coarse[a]) / 3.0;
  }

  // Directional derivatives e_a(Γ_b) along the frame columns.
  std::vector<std::vector<Mat>> e_gamma(N,
                                        std::vector<Mat>(N, Mat::Zero(N, N)));
  for (int a = 0; a < N; ++a)
    for (int i = 0; i < cd; ++i) {
      const double w = fb.full(i, a);
      if (w == 0.0) continue;
      for (int b = 0; b < N; ++b) e_gamma[a][b] += w * d_gamma[i][b];
    }

  CurvatureSample sample;
  sample.base = x;
  sample.frame = frame_struct(model, fb, x);
  sample.dim = N;
  sample.ops.assign(static_cast<std::size_t>(N) * N, Mat::Zero(N, N));

  // R(e_a, e_b) e_c = e_a(Γ_{bc}) − e_b(Γ_{ac}) + Γ_{bc}^d Γ_{ad}
  //                 − Γ_{ac}^d Γ_{bd} − c_{ab}^d Γ_{dc}, assembled as the
  // (c, f) matrix M and stored transposed so that op(f, c) indexes the
  // f-component of R(e_a, e_b) e_c.
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) {
      Mat m = e_gamma[a][b] - e_gamma[b][a] + gamma0[b] * gamma0[a] -
              gamma0[a] * gamma0[b];
      for (int d = 0; d < N; ++d) m -= fb.c[a](b, d) * gamma0[d];
      sample.ops[a * N + b] = m.transpose();
      sample.ops[b * N + a] = -m.transpose();
    }

  fill_derived(sample);
  return sample;
}

// Deterministic unit-norm frame-component vectors for the identity suite.
Vec random_frame_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  const double norm = v.norm();
  return (norm > 1e-12) ? Vec(v / norm) : Vec(Vec::Unit(dim, 0));
}

Vec horizontal_frame_vector(std::mt19937_64& rng, int dim) {
  Vec v = random_frame_vector(rng, dim);
  v[dim - 1] = 0.0;
  const double norm = v.norm();
  return (norm > 1e-12) ? Vec(v / norm) : Vec(Vec::Unit(dim, 0));
}

}  // namespace

// ===========================================================================
// ConnectionData
// ===========================================================================

double ConnectionData::worst_axiom_residual() const {
  double worst = 0.0;
  for (const auto& [name, value] : axiom_residuals)
    worst = std::max(worst, value);
  return worst;
}

ConnectionData levi_civita(const ModelManifold& model,
                           const FrameField& section, const ChartPoint& x) {
  check_point(model, x);
  FrameBundle fb = frame_bundle(model, section, x.coords);
  check_frame_gram(model, fb);
  const int N = model.dim();

  std::vector<Mat> gamma = koszul_gamma(fb);

  std::map<std::string, double> res;
  res["metric_compatibility"] = metricity_residual(gamma);
  double torsion = 0.0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int cc = 0; cc < N; ++cc)
        torsion = std::max(
            torsion,
            std::abs(gamma[a](b, cc) - gamma[b](a, cc) - fb.c[a](b, cc)));
  res["torsion_free"] = torsion;

  ConnectionData conn;
  conn.base = x;
  conn.frame = frame_struct(model, fb, x);
  conn.gamma = std::move(gamma);
  conn.tau_matrix = Mat::Zero(N - 1, N - 1);
  conn.axiom_residuals = std::move(res);
  return conn;
}

ConnectionData levi_civita(const ModelManifold& model, const ChartPoint& x) {
  check_point(model, x);
  auto section = model.frame_field(x.coords);
  return levi_civita(model, *section, x);
}

ConnectionData tw_connection(const ModelManifold& model,
                             const FrameField& section, const ChartPoint& x) {
  check_point(model, x);
  TwBuild build = tw_build(model, section, x);
  const double tol = model.axiom_tolerance();
  for (const auto& [name, value] : build.residuals) {
    if (value > 10.0 * tol) {
      std::ostringstream os;
      os << "Tanaka-Webster axiom residual '" << name << "' = " << value
         << " exceeds 10x tolerance " << tol << " on model " << model.id();
      throw InconsistentModelError(os.str());
    }
  }
  return connection_from_build(model, x, std::move(build));
}

ConnectionData tw_connection(const ModelManifold& model, const ChartPoint& x) {
  check_point(model, x);
  auto section = model.frame_field(x.coords);
  return tw_connection(model, *section, x);
}

// ===========================================================================
// Coordinate-level covariant derivative
// ===========================================================================

Vec TwPointData::frame_components(const Vec& u) const {
  return horizontal.transpose() * (g * u);
}

double TwPointData::omega(const Vec& u, const Vec& v) const {
  return u.dot(g * (j * v));
}

double TwPointData::a(const Vec& u, const Vec& v) const {
  return frame_components(u).dot(a_frame * frame_components(v));
}

TwPointData tw_point_data(const ModelManifold& model, const FrameField& section,
                          const ChartPoint& x) {
  check_point(model, x);
  FrameBundle fb = frame_bundle(model, section, x.coords);
  check_frame_gram(model, fb);
  const Mat a_frame = extract_tau(fb, koszul_gamma(fb));
  return point_data_from_bundle(model, fb, x, a_frame);
}

Vec tw_cov(const ModelManifold& model, const TwPointData& data, const Vec& u,
           const Vec& V, const Vec& dV_du) {
  const Vec d_cov = model.levi_civita_cov(data.base.coords, u, V, dV_du);
  const double th_u = data.theta.dot(u);
  const double th_v = data.theta.dot(V);
  return d_cov - (data.omega(u, V) - data.a(u, V)) * data.reeb -
         th_v * (data.tau_coord * u) - th_u * (data.j * V) -
         th_v * (data.j * u);
}

Vec tw_cov_tau(const ModelManifold& model, const FrameField& section,
               const ChartPoint& x, const Vec& u, const Vec& v) {
  check_point(model, x);
  const TwPointData data = tw_point_data(model, section, x);
  const double u_scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  const double h = model.fd_step_scale() / u_scale;

  // Extend v as the tangential field V(y) and form W(y) = τ_y(V(y)); both
  // derivatives come from Richardson-extrapolated central differences along
  // the line y = x + s u.
  auto v_field = [&](double s) {
    const Vec y = x.coords + s * u;
    return Vec(model.tangentialize(y, v));
  };
  auto w_field = [&](double s) {
    const Vec y = x.coords + s * u;
    const TwPointData dy =
        tw_point_data(model, section, ChartPoint{y, model.id()});
    return Vec(dy.tau_coord * model.tangentialize(y, v));
  };
  const Vec dV_du = richardson_diff_vec(v_field, 0.0, h);
  const Vec dW_du = richardson_diff_vec(w_field, 0.0, h);

  const Vec v0 = model.tangentialize(x.coords, v);
  const Vec w0 = data.tau_coord * v0;
  const Vec cov_w = tw_cov(model, data, u, w0, dW_du);
  const Vec cov_v = tw_cov(model, data, u, v0, dV_du);
  return cov_w - data.tau_coord * cov_v;
}

Vec torsion_derivative_s(const ModelManifold& model, const FrameField& section,
                         const ChartPoint& x, const Vec& X, const Vec& Y) {
  const Vec xh = model.horizontal_part(x.coords, X);
  const Vec yh = model.horizontal_part(x.coords, Y);
  return tw_cov_tau(model, section, x, xh, yh) -
         tw_cov_tau(model, section, x, yh, xh);
}

// ===========================================================================
// Curvature
// ===========================================================================

const Mat& CurvatureSample::op(int i, int j) const {
  return ops[static_cast<std::size_t>(i) * dim + j];
}

Vec CurvatureSample::apply(const Vec& u_f, const Vec& v_f,
                           const Vec& w_f) const {
  // Summing over i < j with the antisymmetric coefficient makes R(u, u) w
  // vanish exactly.
  Vec out = Vec::Zero(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      const double coeff = u_f[i] * v_f[j] - u_f[j] * v_f[i];
      if (coeff != 0.0) out += coeff * (op(i, j) * w_f);
    }
  return out;
}

double CurvatureSample::four_tensor(const Vec& x_f, const Vec& y_f,
                                    const Vec& z_f, const Vec& w_f) const {
  // R(X, Y, Z, W) = g(R(Z, W) Y, X); the frame metric is the identity.
  return x_f.dot(apply(z_f, w_f, y_f));
}

CurvatureSample curvature_sample(const ModelManifold& model,
                                 const FrameField& section,
                                 const ChartPoint& x) {
  check_point(model, x);
  return assemble_curvature(model, section, x, [&](const Vec& y) {
    return tw_gamma_at(model, section, y);
  });
}

CurvatureSample curvature_sample(const ModelManifold& model,
                                 const ChartPoint& x) {
  check_point(model, x);
  auto section = model.frame_field(x.coords);
  return curvature_sample(model, *section, x);
}

CurvatureSample levi_civita_curvature_sample(const ModelManifold& model,
                                             const FrameField& section,
                                             const ChartPoint& x) {
  check_point(model, x);
  return assemble_curvature(model, section, x, [&](const Vec& y) {
    return lc_gamma_at(model, section, y);
  });
}

Tangent curvature(const ModelManifold& model, const ChartPoint& x,
                  const Tangent& u, const Tangent& v, const Tangent& w) {
  check_point(model, x);
  check_tangent(model, x, u, "u");
  check_tangent(model, x, v, "v");
  check_tangent(model, x, w, "w");

  const CurvatureSample sample = curvature_sample(model, x);
  const Mat g = model.metric_matrix(x.coords);
  Mat full(x.coords.size(), sample.dim);
  for (int a = 0; a < sample.dim - 1; ++a)
    full.col(a) = sample.frame.horizontal[a].components;
  full.col(sample.dim - 1) = sample.frame.reeb.components;

  const Vec u_f = full.transpose() * (g * u.components);
  const Vec v_f = full.transpose() * (g * v.components);
  const Vec w_f = full.transpose() * (g * w.components);
  return model.make_tangent(x.coords, full * sample.apply(u_f, v_f, w_f));
}

double sectional(const CurvatureSample& sample, const Vec& u_f,
                 const Vec& v_f) {
  // Gram-Schmidt in frame components (the frame metric is the identity).
  const double nu = u_f.norm();
  if (nu < 1e-12) throw DegeneratePlaneError("first plane vector vanishes");
  const Vec e1 = u_f / nu;
  Vec w = v_f - v_f.dot(e1) * e1;
  const double nw = w.norm();
  if (nw <= 1e-10 * v_f.norm() || nw < 1e-14)
    throw DegeneratePlaneError(
        "plane vectors are numerically linearly dependent");
  const Vec e2 = w / nw;

  // k = (1/4) g(R(e1, e2) e2, e1), antisymmetrized over the metric slot so
  // the value is exactly invariant under orthonormal changes of the plane
  // basis (the residual of that antisymmetry is metric-compatibility noise).
  return 0.125 * (sample.apply(e1, e2, e2).dot(e1) -
                  sample.apply(e1, e2, e1).dot(e2));
}

double sectional(const ModelManifold& model, const ChartPoint& x,
                 const Tangent& u, const Tangent& v) {
  check_point(model, x);
  check_tangent(model, x, u, "u");
  check_tangent(model, x, v, "v");
  const CurvatureSample sample = curvature_sample(model, x);
  const Mat g = model.metric_matrix(x.coords);
  Mat full(x.coords.size(), sample.dim);
  for (int a = 0; a < sample.dim - 1; ++a)
    full.col(a) = sample.frame.horizontal[a].components;
  full.col(sample.dim - 1) = sample.frame.reeb.components;
  const Vec u_f = full.transpose() * (g * u.components);
  const Vec v_f = full.transpose() * (g * v.components);
  return sectional(sample, u_f, v_f);
}

double ricci(const CurvatureSample& sample, const Vec& u_f) {
  const int h = sample.dim - 1;
  double sum = 0.0;
  for (int i = 0; i < h; ++i) {
    Vec ei = Vec::Zero(sample.dim);
    ei[i] = 1.0;
    sum += sample.apply(ei, u_f, u_f)[i];
  }
  return sum;
}

double ricci(const ModelManifold& model, const ChartPoint& x,
             const Tangent& u) {
  check_point(model, x);
  check_tangent(model, x, u, "u");
  const Vec th = model.theta(x.coords);
  const Mat g = model.metric_matrix(x.coords);
  const double norm = std::sqrt(std::max(0.0, u.components.dot(g * u.components)));
  require_domain(std::abs(th.dot(u.components)) <= 1e-8 * std::max(1.0, norm),
                 "Ricci curvature requires a horizontal vector");

  const CurvatureSample sample = curvature_sample(model, x);
  Mat full(x.coords.size(), sample.dim);
  for (int a = 0; a < sample.dim - 1; ++a)
    full.col(a) = sample.frame.horizontal[a].components;
  full.col(sample.dim - 1) = sample.frame.reeb.components;
  const Vec u_f = full.transpose() * (g * u.components);
  return ricci(sample, u_f);
}

// ===========================================================================
// Identity suite
// ===========================================================================

ResidualReport identity_suite(const ModelManifold& model,
                              const std::vector<ChartPoint>& sample_points,
                              int trials) {
  require(!sample_points.empty(), "identity suite needs sample points");
  require(trials >= 1, "identity suite needs at least one trial per point");

  ResidualReport report;
  const int N = model.dim();
  const int h = N - 1;
  const bool fd_model = model.axiom_tolerance() > 1e-7;
  const double tol = fd_model ? 1e-5 : 1e-6;

  std::uint64_t point_index = 0;
  for (const ChartPoint& x : sample_points) {
    check_point(model, x);
    auto section_ptr = model.frame_field(x.coords);
    const FrameField& section = *section_ptr;

    const TwBuild build = tw_build(model, section, x);
    const CurvatureSample r_tw = curvature_sample(model, section, x);
    const CurvatureSample r_lc =
        levi_civita_curvature_sample(model, section, x);

    // Frame-level operators. The frame metric is the identity and theta
    // picks the last component, so all identity algebra happens on frame
    // components.
    const Mat j_f = build.fb.j_frame;
    Mat tau_f = Mat::Zero(N, N);
    tau_f.topLeftCorner(h, h) = build.a_frame;
    const Mat l_f = tau_f + j_f;
    const Mat o_f = tau_f * tau_f + 2.0 * (j_f * tau_f) - Mat::Identity(N, N);
    const bool sasakian = build.a_frame.cwiseAbs().maxCoeff() < 1e-8;

    auto theta_of = [&](const Vec& v) { return v[N - 1]; };
    auto omega_f = [&](const Vec& u, const Vec& v) { return u.dot(j_f * v); };
    auto hor = [&](const Vec& v) {
      Vec out = v;
      out[N - 1] = 0.0;
      return out;
    };
    auto a_of = [&](const Vec& u, const Vec& v) {
      return u.dot(tau_f * v);
    };
    // S on the horizontal parts of frame-component inputs, back in frame
    // components.
    auto s_frame = [&](const Vec& u_f, const Vec& v_f) {
      const Vec u_c = build.fb.full * hor(u_f);
      const Vec v_c = build.fb.full * hor(v_f);
      const Vec s_c = torsion_derivative_s(model, section, x, u_c, v_c);
      return Vec(build.fb.full.transpose() * (build.fb.g * s_c));
    };
    // S on full (unprojected) inputs, for the curvature relation where the
    // direction slots may have Reeb components.
    auto s_frame_general = [&](const Vec& u_f, const Vec& v_f) {
      const Vec u_c = build.fb.full * u_f;
      const Vec v_c = build.fb.full * v_f;
      const Vec s_c = tw_cov_tau(model, section, x, u_c, v_c) -
                      tw_cov_tau(model, section, x, v_c, u_c);
      return Vec(build.fb.full.transpose() * (build.fb.g * s_c));
    };

    std::mt19937_64 rng(0x5eed0000u + point_index);
    ++point_index;

    double worst_a2 = 0.0, worst_a3 = 0.0, worst_a4 = 0.0, worst_a5 = 0.0;
    double worst_a8 = 0.0, worst_rd = 0.0, worst_curv0 = 0.0, worst_j7 = 0.0;
    double worst_s_anti = 0.0, worst_s_sas = 0.0, worst_pair_sym = 0.0;

    Vec t_f = Vec::Zero(N);
    t_f[N - 1] = 1.0;

    for (int trial = 0; trial < trials; ++trial) {
      const Vec xf = random_frame_vector(rng, N);
      const Vec yf = random_frame_vector(rng, N);
      const Vec zf = random_frame_vector(rng, N);
      const Vec wf = random_frame_vector(rng, N);
      const Vec xh = horizontal_frame_vector(rng, N);
      const Vec yh = horizontal_frame_vector(rng, N);
      const Vec zh = horizontal_frame_vector(rng, N);

      // First Bianchi identity on horizontal triples:
      // Σ_cyc R(X,Y)Z = −2 Σ_cyc Ω(X,Y) τZ.
      {
        const Vec lhs = r_tw.apply(xh, yh, zh) + r_tw.apply(yh, zh, xh) +
                        r_tw.apply(zh, xh, yh);
        const Vec rhs = -2.0 * (omega_f(xh, yh) * (tau_f * zh) +
                                omega_f(yh, zh) * (tau_f * xh) +
                                omega_f(zh, xh) * (tau_f * yh));
        worst_a2 = std::max(worst_a2, (lhs - rhs).norm());
      }

      // Reeb-slot identity R(X,T)Y + R(T,Y)X = S(X,Y) on horizontal pairs.
      const Vec s_xy_h = s_frame(xh, yh);
      {
        const Vec lhs = r_tw.apply(xh, t_f, yh) + r_tw.apply(t_f, yh, xh);
        worst_a3 = std::max(worst_a3, (lhs - s_xy_h).norm());
        if (sasakian) worst_s_sas = std::max(worst_s_sas, s_xy_h.norm());
      }

      // Antisymmetry of S under argument swap (evaluated independently on
      // both orders, so the residual measures FD noise, not bookkeeping).
      if (trial == 0) {
        const Vec s_yx_h = s_frame(yh, xh);
        worst_s_anti = std::max(worst_s_anti, (s_xy_h + s_yx_h).norm());
      }

      // 4-tensor antisymmetries in each index pair.
      {
        const double r1 = r_tw.four_tensor(xf, yf, zf, wf);
        worst_a4 = std::max(worst_a4,
                            std::abs(r1 + r_tw.four_tensor(yf, xf, zf, wf)));
        worst_a5 = std::max(worst_a5,
                            std::abs(r1 + r_tw.four_tensor(xf, yf, wf, zf)));
      }

      // Pair interchange with torsion corrections:
      // R(X,Y,Z,W) − R(Z,W,X,Y) = −2Ω(Y,Z)A(X,W) + 2Ω(Y,W)A(X,Z)
      //   − 2Ω(X,W)A(Y,Z) + 2Ω(X,Z)A(Y,W)
      //   + θ(X) g(S(Z_H,W_H),Y) + θ(Y) g(S(W_H,Z_H),X)
      //   + θ(Z) g(S(Y_H,X_H),W) + θ(W) g(S(X_H,Y_H),Z).
      {
        const Vec s_zw = s_frame(zf, wf);
        const Vec s_xy8 = s_frame(xf, yf);
        const double lhs = r_tw.four_tensor(xf, yf, zf, wf);
        double rhs = r_tw.four_tensor(zf, wf, xf, yf);
        rhs += -2.0 * omega_f(yf, zf) * a_of(xf, wf) +
               2.0 * omega_f(yf, wf) * a_of(xf, zf) -
               2.0 * omega_f(xf, wf) * a_of(yf, zf) +
               2.0 * omega_f(xf, zf) * a_of(yf, wf);
        rhs += theta_of(xf) * s_zw.dot(yf) - theta_of(yf) * s_zw.dot(xf) -
               theta_of(zf) * s_xy8.dot(wf) + theta_of(wf) * s_xy8.dot(zf);
        worst_a8 = std::max(worst_a8, std::abs(lhs - rhs));

        if (sasakian) {
          worst_pair_sym = std::max(
              worst_pair_sym,
              std::abs(lhs - r_tw.four_tensor(zf, wf, xf, yf)));
        }
      }

      // Levi-Civita curvature from the Webster curvature:
      // R^D(X,Y)Z = R(X,Y)Z + (LX ∧ LY)Z − 2Ω(X,Y)JZ
      //   − g(S(X,Y),Z) T + θ(Z) S(X,Y)
      //   − 2 g((θ∧O)(X,Y),Z) T + 2 θ(Z) (θ∧O)(X,Y),
      // with L = τ + J, O = τ² + 2Jτ − I, (U∧V)W = g(U,W)V − g(V,W)U and
      // (θ∧O)(X,Y) = (1/2){θ(X) OY − θ(Y) OX}.
      {
        const Vec s_gen = s_frame_general(xf, yf);
        const Vec lx = l_f * xf, ly = l_f * yf;
        const Vec wedge_l = lx.dot(zf) * ly - ly.dot(zf) * lx;
        const Vec theta_o =
            0.5 * (theta_of(xf) * (o_f * yf) - theta_of(yf) * (o_f * xf));
        Vec rhs = r_tw.apply(xf, yf, zf) + wedge_l -
                  2.0 * omega_f(xf, yf) * (j_f * zf) - s_gen.dot(zf) * t_f +
                  theta_of(zf) * s_gen - 2.0 * theta_o.dot(zf) * t_f +
                  2.0 * theta_of(zf) * theta_o;
        const Vec lhs = r_lc.apply(xf, yf, zf);
        worst_rd = std::max(worst_rd, (lhs - rhs).norm());
      }

      // Flat group models only: the Levi-Civita curvature must match the
      // constant-φ-sectional-curvature form with c = −3, and the
      // Tanaka-Webster curvature must match the constant-k form (both sides
      // of which vanish here).
      if (model.flat_group()) {
        const Vec rhs_curv0 =
            -(theta_of(zf) * (theta_of(xf) * yf - theta_of(yf) * xf) +
              (xf.dot(zf) * theta_of(yf) - yf.dot(zf) * theta_of(xf)) * t_f +
              omega_f(zf, yf) * (j_f * xf) - omega_f(zf, xf) * (j_f * yf) +
              2.0 * omega_f(xf, yf) * (j_f * zf));
        worst_curv0 = std::max(
            worst_curv0, (r_lc.apply(xf, yf, zf) - rhs_curv0).norm());

        const Vec rhs_j7 = omega_f(zf, yf) * (tau_f * xf) -
                           omega_f(zf, xf) * (tau_f * yf) +
                           a_of(zf, yf) * (j_f * xf) -
                           a_of(zf, xf) * (j_f * yf);
        worst_j7 =
            std::max(worst_j7, (r_tw.apply(xf, yf, zf) - rhs_j7).norm());
      }
    }

    report.add("first_bianchi_horizontal", x.coords, worst_a2, tol);
    report.add("reeb_curvature_torsion_derivative", x.coords, worst_a3, tol);
    report.add("four_tensor_antisym_metric_pair", x.coords, worst_a4, tol);
    report.add("four_tensor_antisym_operator_pair", x.coords, worst_a5, tol);
    report.add("pair_interchange_torsion", x.coords, worst_a8, tol);
    report.add("riemannian_vs_webster_curvature", x.coords, worst_rd, tol);
    report.add("s_antisymmetry", x.coords, worst_s_anti, tol);
    if (model.flat_group()) {
      report.add("sasakian_space_form_c_minus_3", x.coords, worst_curv0,
                 1e-6);
      report.add("flat_constant_curvature_form", x.coords, worst_j7, 1e-8);
    }
    if (sasakian) {
      report.add("sasakian_s_vanishes", x.coords, worst_s_sas, 1e-6);
      report.add("sasakian_pair_symmetry", x.coords, worst_pair_sym, 1e-6);
    }
  }

  return report;
}

}  // namespace pseudoherm
