#include "pseudoherm/models.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "pseudoherm/numerics.hpp"

namespace pseudoherm {

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

// Levi-Civita covariant derivative for global-chart group models: coordinate
// Christoffels from Richardson-extrapolated central differences of the
// metric matrix.
Vec group_levi_civita_cov(const ModelManifold& m, const Vec& x, const Vec& u,
                          const Vec& V, const Vec& dV_du) {
  const int nc = m.chart_dim();
  const Mat g = m.metric_matrix(x);
  std::vector<Mat> dg(nc);
  for (int j = 0; j < nc; ++j) {
    const double h = fd_step(x[j], 1e-3);
    dg[j] = richardson_diff_mat(
        [&](double s) {
          Vec xs = x;
          xs[j] = s;
          return m.metric_matrix(xs);
        },
        x[j], h);
  }
  Vec lower = Vec::Zero(nc);
  for (int l = 0; l < nc; ++l) {
    double acc = 0.0;
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j)
        acc += u[i] * V[j] * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
    lower[l] = 0.5 * acc;
  }
  return dV_du + g.ldlt().solve(lower);
}

// Reeb vector from the kernel of the (antisymmetric, rank-2n) dθ matrix,
// normalized by θ. Throws when the contact structure degenerates.
Vec reeb_from_kernel(const Mat& dth, const Vec& th, const std::string& id) {
  Eigen::JacobiSVD<Mat> svd(dth, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const int nc = static_cast<int>(th.size());
  if (sv[nc - 2] < 1e-10 * std::max(sv[0], 1.0))
    throw DegenerateMetricError(
        "contact form is degenerate (rank-deficient dtheta) on model " + id);
  const Vec kernel = svd.matrixV().col(nc - 1);
  const double scale = th.dot(kernel);
  if (std::abs(scale) < 1e-12)
    throw DegenerateMetricError(
        "contact form is degenerate (theta vanishes on the kernel of dtheta) "
        "on model " + id);
  return kernel / scale;
}

// ---------------------------------------------------------------------------
// Heisenberg group H^n
// ---------------------------------------------------------------------------
//
// Coordinates (x^1..x^n, y^1..y^n, t). Frame columns are interleaved
// (X_1, Y_1, X_2, Y_2, ...) so that e_{2α+1} = J e_{2α}.

class HeisenbergFrameField final : public FrameField {
 public:
  explicit HeisenbergFrameField(int n) : n_(n) {}

  Mat horizontal(const Vec& x) const override {
    const int nc = 2 * n_ + 1;
    Mat E = Mat::Zero(nc, 2 * n_);
    for (int a = 0; a < n_; ++a) {
      E(a, 2 * a) = 1.0;            // X_α = ∂_{x^α} + y^α ∂_t
      E(2 * n_, 2 * a) = x[n_ + a];
      E(n_ + a, 2 * a + 1) = 1.0;   // Y_α = ∂_{y^α} − x^α ∂_t
      E(2 * n_, 2 * a + 1) = -x[a];
    }
    return E;
  }

  Vec reeb(const Vec& x) const override {
    const int nc = 2 * n_ + 1;
    Vec T = Vec::Zero(nc);
    T[nc - 1] = 1.0;
    return T;
  }

  FrameJet jet(const Vec& x) const override {
    const int nc = 2 * n_ + 1;
    FrameJet out;
    out.horizontal = horizontal(x);
    out.reeb = reeb(x);
    out.d_horizontal.assign(2 * n_, Mat::Zero(nc, nc));
    for (int a = 0; a < n_; ++a) {
      out.d_horizontal[2 * a](2 * n_, n_ + a) = 1.0;
      out.d_horizontal[2 * a + 1](2 * n_, a) = -1.0;
    }
    out.d_reeb = Mat::Zero(nc, nc);
    return out;
  }

 private:
  int n_;
};

class HeisenbergModel final : public ModelManifold {
 public:
  explicit HeisenbergModel(int n)
      : n_(n), field_(std::make_shared<HeisenbergFrameField>(n)) {
    require(n >= 1, "heisenberg model needs CR dimension n >= 1");
  }

  std::string id() const override {
    return "heisenberg:" + std::to_string(n_);
  }
  int n() const override { return n_; }

  Vec theta(const Vec& x) const override {
    const int nc = chart_dim();
    Vec th = Vec::Zero(nc);
    for (int a = 0; a < n_; ++a) {
      th[a] = -x[n_ + a];  // −y^α dx^α
      th[n_ + a] = x[a];   // +x^α dy^α
    }
    th[nc - 1] = 1.0;
    return th;
  }

  Mat dtheta_matrix(const Vec& x) const override {
    const int nc = chart_dim();
    Mat D = Mat::Zero(nc, nc);
    for (int a = 0; a < n_; ++a) {
      D(a, n_ + a) = 2.0;
      D(n_ + a, a) = -2.0;
    }
    return D;
  }

  Vec reeb(const Vec& x) const override { return field_->reeb(x); }

  Mat j_coord(const Vec& x) const override {
    const int nc = chart_dim();
    Mat J = Mat::Zero(nc, nc);
    for (int a = 0; a < n_; ++a) {
      J(a, n_ + a) = -1.0;       // J ∂-components: JX_α = Y_α, JY_α = −X_α
      J(n_ + a, a) = 1.0;
      J(nc - 1, a) = -x[a];
      J(nc - 1, n_ + a) = -x[n_ + a];
    }
    return J;
  }

  std::shared_ptr<const FrameField> frame_field(const Vec&) const override {
    return field_;
  }

  Vec levi_civita_cov(const Vec& x, const Vec& u, const Vec& V,
                      const Vec& dV_du) const override {
    return group_levi_civita_cov(*this, x, u, V, dV_du);
  }

  bool flat_group() const override { return true; }

 private:
  int n_;
  std::shared_ptr<HeisenbergFrameField> field_;
};

// ---------------------------------------------------------------------------
// Conformally scaled Heisenberg group: θ̂ = e^{κ x¹} θ
// ---------------------------------------------------------------------------
//
// Same contact distribution and J on H. The conformal factor tilts the Reeb
// field into the horizontal direction that compensates d(e^{κx¹}) on the
// contact planes:
//
//   dθ̂ = e^{κx¹} (κ dx¹ ∧ θ + dθ),   T̂ = e^{−κx¹} (T − (κ/2) Y_1).
//
// Pointwise tensors use these closed forms; frame and Reeb derivatives use
// the central finite-difference fallback.

class ScaledHeisenbergModel;

class ScaledFrameField final : public FrameField {
 public:
  ScaledFrameField(const ScaledHeisenbergModel* model, int n)
      : model_(model), n_(n) {}

  Mat horizontal(const Vec& x) const override;
  Vec reeb(const Vec& x) const override;
  FrameJet jet(const Vec& x) const override;

 private:
  const ScaledHeisenbergModel* model_;
  int n_;
};

class ScaledHeisenbergModel final : public ModelManifold {
 public:
  ScaledHeisenbergModel(int n, double kappa)
      : base_(n), kappa_(kappa) {
    require(n >= 1, "scaled-heisenberg model needs CR dimension n >= 1");
    field_ = std::make_shared<ScaledFrameField>(this, n);
  }

  std::string id() const override {
    std::ostringstream os;
    os << "scaled-heisenberg:" << base_.n() << ":" << kappa_;
    return os.str();
  }
  int n() const override { return base_.n(); }
  double kappa() const { return kappa_; }

  double scale(const Vec& x) const { return std::exp(kappa_ * x[0]); }

  Vec theta(const Vec& x) const override { return scale(x) * base_.theta(x); }

  Mat dtheta_matrix(const Vec& x) const override {
    const int nc = chart_dim();
    const Vec th = base_.theta(x);
    Vec dx1 = Vec::Zero(nc);
    dx1[0] = 1.0;
    Mat D = kappa_ * (dx1 * th.transpose() - th * dx1.transpose()) +
            base_.dtheta_matrix(x);
    return scale(x) * D;
  }

  Vec reeb(const Vec& x) const override {
    const int nc = chart_dim();
    const int n = base_.n();
    Vec t_hat = Vec::Zero(nc);
    t_hat[nc - 1] = 1.0;                   // T = ∂_t
    t_hat[n] -= 0.5 * kappa_;              // −(κ/2) Y_1, Y_1 = ∂_{y¹} − x¹ ∂_t
    t_hat[nc - 1] += 0.5 * kappa_ * x[0];
    return t_hat / scale(x);
  }

  Mat j_coord(const Vec& x) const override {
    // J on H is inherited; the extension kills the new Reeb direction:
    // J u = J_base(u − θ̂(u) T̂).
    const Mat Jb = base_.j_coord(x);
    const Vec That = reeb(x);
    const Vec th = theta(x);
    return Jb - (Jb * That) * th.transpose();
  }

  std::shared_ptr<const FrameField> frame_field(const Vec&) const override {
    return field_;
  }

  Vec levi_civita_cov(const Vec& x, const Vec& u, const Vec& V,
                      const Vec& dV_du) const override {
    return group_levi_civita_cov(*this, x, u, V, dV_du);
  }

  bool flat_group() const override { return kappa_ == 0.0; }

  // Frame derivatives here come from finite differences, so
  // connection-level differentiation runs at a coarser step and a looser
  // axiom tolerance.
  double axiom_tolerance() const override { return 1e-6; }
  double fd_step_scale() const override { return 1e-2; }

  const HeisenbergModel& base() const { return base_; }

 private:
  HeisenbergModel base_;
  double kappa_;
  std::shared_ptr<ScaledFrameField> field_;
};

Mat ScaledFrameField::horizontal(const Vec& x) const {
  // The raw frame has Gram e^{κx¹} I under the scaled Levi form; a single
  // normalization restores orthonormality and keeps the J-pairing.
  const double s = std::exp(-0.5 * model_->kappa() * x[0]);
  return s * model_->base().frame_field(x)->horizontal(x);
}

Vec ScaledFrameField::reeb(const Vec& x) const { return model_->reeb(x); }

FrameJet ScaledFrameField::jet(const Vec& x) const {
  const int nc = 2 * n_ + 1;
  FrameJet out;
  out.horizontal = horizontal(x);
  out.reeb = reeb(x);
  out.d_horizontal.assign(2 * n_, Mat::Zero(nc, nc));
  out.d_reeb = Mat::Zero(nc, nc);
  for (int j = 0; j < nc; ++j) {
    const double h = fd_step(x[j], 1e-5);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Mat Ep = horizontal(xp), Em = horizontal(xm);
    for (int a = 0; a < 2 * n_; ++a)
      out.d_horizontal[a].col(j) = (Ep.col(a) - Em.col(a)) / (2.0 * h);
    out.d_reeb.col(j) = (reeb(xp) - reeb(xm)) / (2.0 * h);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CR sphere S^{2n+1} ⊂ C^{n+1}
// ---------------------------------------------------------------------------
//
// Ambient layout: coords = (Re z_0..Re z_n, Im z_0..Im z_n); the complex
// structure i maps (a, b) to (−b, a). All evaluators extend smoothly off the
// unit sphere so finite-difference stencils stay well defined.

Mat ambient_i(int n) {
  const int m = n + 1;
  Mat I2 = Mat::Zero(2 * m, 2 * m);
  for (int k = 0; k < m; ++k) {
    I2(k, m + k) = -1.0;
    I2(m + k, k) = 1.0;
  }
  return I2;
}

class SphereModel;

// Frame section with pivot choices frozen at the anchor point, so nearby
// evaluations (finite-difference stencils, Koszul brackets) see one smooth
// frame. Derivatives follow the Gram-Schmidt chain rule exactly.
class SphereFrameField final : public FrameField {
 public:
  SphereFrameField(const SphereModel* model, const Vec& anchor);

  Mat horizontal(const Vec& x) const override;
  Vec reeb(const Vec& x) const override;
  FrameJet jet(const Vec& x) const override;

 private:
  // Tangential-horizontal projector Π(x) and its coordinate derivatives.
  Mat projector(const Vec& x) const;
  std::vector<Mat> projector_derivs(const Vec& x) const;

  const SphereModel* model_;
  int n_;
  std::vector<int> pivots_;
};

class SphereModel final : public ModelManifold {
 public:
  explicit SphereModel(int n) : n_(n), i_(ambient_i(n)) {
    require(n >= 1, "sphere model needs CR dimension n >= 1");
  }

  std::string id() const override { return "sphere:" + std::to_string(n_); }
  int n() const override { return n_; }
  int chart_dim() const override { return 2 * n_ + 2; }

  const Mat& ambient_complex() const { return i_; }

  Vec theta(const Vec& x) const override { return i_ * x; }

  Mat dtheta_matrix(const Vec& x) const override { return -2.0 * i_; }

  Vec reeb(const Vec& x) const override {
    return (i_ * x) / x.squaredNorm();
  }

  Mat j_coord(const Vec& x) const override {
    const double q = x.squaredNorm();
    const Vec w = i_ * x;
    const Mat P = Mat::Identity(chart_dim(), chart_dim()) -
                  (x * x.transpose() + w * w.transpose()) / q;
    return i_ * P;
  }

  std::shared_ptr<const FrameField> frame_field(const Vec& anchor) const
      override {
    return std::make_shared<SphereFrameField>(this, anchor);
  }

  Vec levi_civita_cov(const Vec& x, const Vec& u, const Vec& V,
                      const Vec& dV_du) const override {
    return dV_du + (u.dot(V) / x.squaredNorm()) * x;
  }

  Vec project(const Vec& x) const override { return x / x.norm(); }

  Vec tangentialize(const Vec& x, const Vec& u) const override {
    return u - (u.dot(x) / x.squaredNorm()) * x;
  }

 private:
  int n_;
  Mat i_;
};

SphereFrameField::SphereFrameField(const SphereModel* model, const Vec& anchor)
    : model_(model), n_(model->n()) {
  // Greedy pivoting: at the anchor, repeatedly pick the ambient basis vector
  // whose projection has the largest residual after orthogonalization
  // against the pairs already chosen. Deterministic (ties keep the lowest
  // index).
  const int nc = 2 * n_ + 2;
  const Mat P = projector(anchor);
  std::vector<Vec> chosen;
  std::vector<bool> used(nc, false);
  for (int round = 0; round < n_; ++round) {
    int best = -1;
    double best_norm = -1.0;
    Vec best_res;
    for (int k = 0; k < nc; ++k) {
      if (used[k]) continue;
      Vec r = P.col(k);
      for (const auto& e : chosen) r -= e.dot(r) * e;
      const double rn = r.norm();
      if (rn > best_norm + 1e-14) {
        best_norm = rn;
        best = k;
        best_res = r;
      }
    }
    if (best < 0 || best_norm < 1e-6)
      throw NumericError("sphere frame construction degenerated at anchor");
    used[best] = true;
    pivots_.push_back(best);
    const Vec e = best_res / best_norm;
    chosen.push_back(e);
    chosen.push_back(model_->ambient_complex() * e);
  }
}

Mat SphereFrameField::projector(const Vec& x) const {
  const int nc = 2 * n_ + 2;
  const double q = x.squaredNorm();
  const Vec w = model_->ambient_complex() * x;
  return Mat::Identity(nc, nc) -
         (x * x.transpose() + w * w.transpose()) / q;
}

std::vector<Mat> SphereFrameField::projector_derivs(const Vec& x) const {
  const int nc = 2 * n_ + 2;
  const double q = x.squaredNorm();
  const Mat& I2 = model_->ambient_complex();
  const Vec w = I2 * x;
  const Mat xxt = x * x.transpose();
  const Mat wwt = w * w.transpose();
  std::vector<Mat> dP(nc);
  for (int j = 0; j < nc; ++j) {
    Vec ej = Vec::Zero(nc);
    ej[j] = 1.0;
    const Vec wj = I2 * ej;
    Mat d = (ej * x.transpose() + x * ej.transpose() + wj * w.transpose() +
             w * wj.transpose()) /
                q -
            (xxt + wwt) * (2.0 * x[j] / (q * q));
    dP[j] = -d;
  }
  return dP;
}

Mat SphereFrameField::horizontal(const Vec& x) const {
  const int nc = 2 * n_ + 2;
  const Mat P = projector(x);
  Mat E(nc, 2 * n_);
  int col = 0;
  for (int round = 0; round < n_; ++round) {
    Vec r = P.col(pivots_[round]);
    for (int c = 0; c < col; ++c) r -= E.col(c).dot(r) * E.col(c);
    const double rn = r.norm();
    if (rn < 1e-10)
      throw NumericError(
          "sphere frame section left its validity neighborhood");
    E.col(col) = r / rn;
    E.col(col + 1) = model_->ambient_complex() * E.col(col);
    col += 2;
  }
  return E;
}

Vec SphereFrameField::reeb(const Vec& x) const { return model_->reeb(x); }

FrameJet SphereFrameField::jet(const Vec& x) const {
  const int nc = 2 * n_ + 2;
  const Mat& I2 = model_->ambient_complex();
  const Mat P = projector(x);
  const std::vector<Mat> dP = projector_derivs(x);

  FrameJet out;
  out.horizontal = Mat(nc, 2 * n_);
  out.d_horizontal.assign(2 * n_, Mat::Zero(nc, nc));

  // Columns with per-coordinate derivatives, built by the Gram-Schmidt chain
  // rule: projection, orthogonalization against previous pair members,
  // normalization, J-pairing.
  int col = 0;
  for (int round = 0; round < n_; ++round) {
    Vec v = P.col(pivots_[round]);
    std::vector<Vec> dv(nc);
    for (int j = 0; j < nc; ++j) dv[j] = dP[j].col(pivots_[round]);

    for (int c = 0; c < col; ++c) {
      const Vec e = out.horizontal.col(c);
      const double ip = e.dot(v);
      for (int j = 0; j < nc; ++j) {
        const Vec de = out.d_horizontal[c].col(j);
        dv[j] -= (de.dot(v) + e.dot(dv[j])) * e + ip * de;
      }
      v -= ip * e;
    }

    const double vn = v.norm();
    if (vn < 1e-10)
      throw NumericError(
          "sphere frame section left its validity neighborhood");
    const Vec e = v / vn;
    out.horizontal.col(col) = e;
    out.horizontal.col(col + 1) = I2 * e;
    for (int j = 0; j < nc; ++j) {
      const Vec de = dv[j] / vn - v * (v.dot(dv[j]) / (vn * vn * vn));
      out.d_horizontal[col].col(j) = de;
      out.d_horizontal[col + 1].col(j) = I2 * de;
    }
    col += 2;
  }

  out.reeb = model_->reeb(x);
  const double q = x.squaredNorm();
  out.d_reeb = Mat(nc, nc);
  for (int j = 0; j < nc; ++j) {
    Vec ej = Vec::Zero(nc);
    ej[j] = 1.0;
    out.d_reeb.col(j) = (I2 * ej) / q - (I2 * x) * (2.0 * x[j] / (q * q));
  }
  return out;
}

}  // namespace

std::shared_ptr<const ModelManifold> heisenberg(int n) {
  require(n >= 1, "heisenberg model needs CR dimension n >= 1");
  return std::make_shared<HeisenbergModel>(n);
}

std::shared_ptr<const ModelManifold> sphere(int n) {
  require(n >= 1, "sphere model needs CR dimension n >= 1");
  return std::make_shared<SphereModel>(n);
}

std::shared_ptr<const ModelManifold> scaled_heisenberg(int n, double kappa) {
  require(n >= 1, "scaled-heisenberg model needs CR dimension n >= 1");
  return std::make_shared<ScaledHeisenbergModel>(n, kappa);
}

std::shared_ptr<const ModelManifold> model_from_id(const std::string& id,
                                                   double kappa_override) {
  std::vector<std::string> parts;
  std::stringstream ss(id);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  require(!parts.empty(), "empty model id");

  const auto parse_n = [&](const std::string& s) {
    int n = 0;
    try {
      n = std::stoi(s);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad CR dimension in model id: " + id);
    }
    require(n >= 1, "model id has invalid CR dimension: " + id);
    return n;
  };

  if (parts[0] == "heisenberg") {
    require(parts.size() == 2, "expected heisenberg:n, got " + id);
    return heisenberg(parse_n(parts[1]));
  }
  if (parts[0] == "sphere") {
    require(parts.size() == 2, "expected sphere:n, got " + id);
    return sphere(parse_n(parts[1]));
  }
  if (parts[0] == "scaled-heisenberg") {
    require(parts.size() == 2 || parts.size() == 3,
            "expected scaled-heisenberg:n[:kappa], got " + id);
    double kappa = 0.1;
    if (parts.size() == 3) {
      try {
        kappa = std::stod(parts[2]);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad kappa in model id: " + id);
      }
    }
    if (std::isfinite(kappa_override)) kappa = kappa_override;
    return scaled_heisenberg(parse_n(parts[1]), kappa);
  }
  throw std::invalid_argument("unknown model id: " + id);
}

}  // namespace pseudoherm
