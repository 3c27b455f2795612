#include "pseudoherm/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pseudoherm/numerics.hpp"

namespace pseudoherm {

namespace {

void check_point(const ModelManifold& model, const ChartPoint& x) {
  require(static_cast<int>(x.coords.size()) == model.chart_dim(),
          "point dimension mismatch for model " + model.id());
  require(x.model_id == model.id(),
          "point belongs to model " + x.model_id + ", not " + model.id());
}

void check_tangent(const ModelManifold& model, const ChartPoint& x,
                   const Tangent& u) {
  require(static_cast<int>(u.components.size()) == model.chart_dim(),
          "tangent dimension mismatch for model " + model.id());
  require(u.base.model_id == model.id(),
          "tangent base belongs to model " + u.base.model_id + ", not " +
              model.id());
  require((u.base.coords - x.coords).cwiseAbs().maxCoeff() < 1e-12,
          "tangent is based at a different point");
}

}  // namespace

Mat ModelManifold::metric_matrix(const Vec& x) const {
  const Vec th = theta(x);
  const Mat g =
      0.5 * dtheta_matrix(x) * j_coord(x) + th * th.transpose();
  return 0.5 * (g + g.transpose());
}

ChartPoint ModelManifold::make_point(const Vec& coords) const {
  require(static_cast<int>(coords.size()) == chart_dim(),
          "point dimension mismatch for model " + id());
  return ChartPoint{coords, id()};
}

Tangent ModelManifold::make_tangent(const Vec& coords,
                                    const Vec& components) const {
  require(static_cast<int>(components.size()) == chart_dim(),
          "tangent dimension mismatch for model " + id());
  return Tangent{make_point(coords), components};
}

Vec ModelManifold::horizontal_part(const Vec& x, const Vec& u) const {
  const Vec ut = tangentialize(x, u);
  return ut - theta(x).dot(ut) * reeb(x);
}

AdaptedFrame ModelManifold::adapted_frame(const Vec& x) const {
  const auto field = frame_field(x);
  const Mat E = field->horizontal(x);
  const Vec T = field->reeb(x);
  const int m = h_dim();

  AdaptedFrame frame;
  frame.base = make_point(x);
  frame.horizontal.reserve(m);
  for (int a = 0; a < m; ++a)
    frame.horizontal.push_back(Tangent{frame.base, E.col(a)});
  frame.reeb = Tangent{frame.base, T};

  // Frames are built J-paired: e_{2k+1} = J e_{2k}.
  frame.j_matrix = Mat::Zero(m, m);
  for (int k = 0; 2 * k + 1 < m; ++k) {
    frame.j_matrix(2 * k + 1, 2 * k) = 1.0;
    frame.j_matrix(2 * k, 2 * k + 1) = -1.0;
  }
  const Mat g = metric_matrix(x);
  frame.g_matrix = E.transpose() * g * E;
  return frame;
}

double dtheta(const ModelManifold& model, const ChartPoint& x,
              const Tangent& u, const Tangent& v) {
  check_point(model, x);
  check_tangent(model, x, u);
  check_tangent(model, x, v);
  return u.components.dot(model.dtheta_matrix(x.coords) * v.components);
}

double omega(const ModelManifold& model, const ChartPoint& x,
             const Tangent& u, const Tangent& v) {
  check_point(model, x);
  check_tangent(model, x, u);
  check_tangent(model, x, v);
  return u.components.dot(model.metric_matrix(x.coords) *
                          (model.j_coord(x.coords) * v.components));
}

double webster_metric(const ModelManifold& model, const ChartPoint& x,
                      const Tangent& u, const Tangent& v) {
  check_point(model, x);
  check_tangent(model, x, u);
  check_tangent(model, x, v);
  return u.components.dot(model.metric_matrix(x.coords) * v.components);
}

double metric_duality_residual(const ModelManifold& model,
                               const ChartPoint& x) {
  check_point(model, x);
  const Vec& xc = x.coords;
  const int nc = model.chart_dim();
  const Mat g = model.metric_matrix(xc);
  const Vec T = model.reeb(xc);

  // Inverse (or tangential pseudoinverse) of the Webster matrix.
  Mat ginv(nc, nc);
  Eigen::SelfAdjointEigenSolver<Mat> eig(g);
  const Vec& ev = eig.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  const int expected_rank = model.dim();
  int rank = 0;
  Vec inv_ev = Vec::Zero(nc);
  for (int i = 0; i < nc; ++i) {
    if (std::abs(ev[i]) > 1e-10 * scale) {
      inv_ev[i] = 1.0 / ev[i];
      ++rank;
    }
  }
  if (rank < expected_rank)
    throw DegenerateMetricError("Webster metric is singular at the sampled "
                                "point of model " + model.id());
  ginv = eig.eigenvectors() * inv_ev.asDiagonal() *
         eig.eigenvectors().transpose();

  // Contact cometric from the orthonormal horizontal frame.
  const Mat E = model.frame_field(xc)->horizontal(xc);
  const Mat frame_cometric = E * E.transpose();

  return (frame_cometric - (ginv - T * T.transpose())).cwiseAbs().maxCoeff();
}

std::map<std::string, double> adapted_frame_residuals(
    const ModelManifold& model, const AdaptedFrame& frame) {
  const Vec& x = frame.base.coords;
  const Vec th = model.theta(x);
  const Mat dth = model.dtheta_matrix(x);
  const int m = model.h_dim();

  std::map<std::string, double> res;

  double horiz = 0.0;
  for (const auto& e : frame.horizontal)
    horiz = std::max(horiz, std::abs(th.dot(e.components)));
  res["theta_on_horizontal"] = horiz;

  res["theta_on_reeb"] = std::abs(th.dot(frame.reeb.components) - 1.0);

  // dθ(T, ·) vanishes as a form on the tangent space, so contract against
  // the frame rather than reading ambient covector components (which carry a
  // conormal part on the sphere chart).
  const Vec t_hook = dth.transpose() * frame.reeb.components;
  double contract = std::abs(t_hook.dot(frame.reeb.components));
  for (const auto& e : frame.horizontal)
    contract = std::max(contract, std::abs(t_hook.dot(e.components)));
  res["reeb_contracts_dtheta"] = contract;

  res["j_squared"] =
      (frame.j_matrix * frame.j_matrix + Mat::Identity(m, m))
          .cwiseAbs()
          .maxCoeff();

  const Mat& G = frame.g_matrix;
  res["g_symmetric"] = (G - G.transpose()).cwiseAbs().maxCoeff();
  res["g_j_invariant"] =
      (frame.j_matrix.transpose() * G * frame.j_matrix - G)
          .cwiseAbs()
          .maxCoeff();
  Eigen::SelfAdjointEigenSolver<Mat> eig(G);
  res["g_min_eigenvalue"] = eig.eigenvalues().minCoeff();
  res["g_orthonormal"] = (G - Mat::Identity(m, m)).cwiseAbs().maxCoeff();
  return res;
}

double frame_jet_fd_residual(const ModelManifold& model, const Vec& x) {
  const auto field = model.frame_field(x);
  const FrameJet jet = field->jet(x);
  const int nc = model.chart_dim();
  const int m = model.h_dim();

  double worst = 0.0;
  for (int j = 0; j < nc; ++j) {
    const double h = fd_step(x[j], 1e-5);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Mat Ep = field->horizontal(xp), Em = field->horizontal(xm);
    const Vec Tp = field->reeb(xp), Tm = field->reeb(xm);
    for (int a = 0; a < m; ++a) {
      const Vec fd = (Ep.col(a) - Em.col(a)) / (2.0 * h);
      worst = std::max(worst,
                       (fd - jet.d_horizontal[a].col(j)).cwiseAbs().maxCoeff());
    }
    const Vec fdT = (Tp - Tm) / (2.0 * h);
    worst = std::max(worst, (fdT - jet.d_reeb.col(j)).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::vector<ChartPoint> sample_points(const ModelManifold& model, int count,
                                      std::uint64_t seed) {
  const auto raw = halton_box_points(model.chart_dim(), count, seed);
  std::vector<ChartPoint> pts;
  pts.reserve(raw.size());
  for (const auto& c : raw) pts.push_back(model.make_point(model.project(c)));
  return pts;
}

Tangent sample_tangent(const ModelManifold& model, const ChartPoint& x,
                       std::uint64_t index) {
  static const std::uint32_t primes[] = {41, 43, 47, 53, 59, 61,
                                         67, 71, 73, 79, 83, 89};
  const int nc = model.chart_dim();
  Vec u(nc);
  for (int d = 0; d < nc; ++d)
    u[d] = 4.0 * halton(index, primes[d % 12]) - 2.0;
  return Tangent{x, model.tangentialize(x.coords, u)};
}

}  // namespace pseudoherm
