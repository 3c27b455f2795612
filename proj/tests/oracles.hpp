#pragma once

// Test-side oracles, deliberately independent of the production connection
// pipeline.
//
// The least-squares oracle treats the defining properties of the canonical
// connection as one overdetermined linear system in the frame Christoffels
// Γ_{abc} = g(∇_{e_a} e_b, e_c) and the torsion matrix A_{pq} = g(τ e_p, e_q):
//
//   metricity          Γ_{abc} + Γ_{acb} = 0
//   torsion            Γ_{abc} − Γ_{bac} − c_{abc} = −2Ω_{ab} δ_{cT}
//                          + δ_{aT} τ_{bc} − δ_{bT} τ_{ac}
//   J parallel         Σ_c [ Γ_{adc} j_{cb} + Γ_{abc} j_{dc} ] = 0
//   Reeb parallel      Γ_{a,T,c} = 0
//   τ symmetric        A_{pq} − A_{qp} = 0
//   τ anti-commutes    (A j + j A)_{pq} = 0
//
// (indices run over the adapted frame, T marks the Reeb slot; the frame
// sections are J-paired and orthonormal everywhere, so the frame components
// of g and J are constant and the parallelism conditions are algebraic).
// The connection is the unique solution, so a dense least-squares solve
// recovers it without ever touching the construction used in production.

#include <Eigen/Dense>
#include <vector>

#include "pseudoherm/manifold.hpp"

namespace pseudoherm::oracles {

// ===========================================================================
// Frame data assembled from scratch
// ===========================================================================

struct FrameData {
  Mat full;             // chart_dim x dim, horizontal columns then Reeb
  Mat g;                // chart-level Webster metric
  Vec theta;            // contact form components
  Mat j_frame;          // j_frame(b,c) = g(e_b, J e_c)
  std::vector<Mat> c;   // c[a](b,d) = g([e_a, e_b], e_d)
};

inline FrameData frame_data(const ModelManifold& model,
                            const FrameField& section, const Vec& x) {
  const int N = model.dim();
  FrameData out;
  const FrameJet jet = section.jet(x);
  out.full = Mat(model.chart_dim(), N);
  out.full.leftCols(N - 1) = jet.horizontal;
  out.full.col(N - 1) = jet.reeb;
  std::vector<Mat> d_full = jet.d_horizontal;
  d_full.push_back(jet.d_reeb);

  out.g = model.metric_matrix(x);
  out.theta = model.theta(x);
  out.j_frame = out.full.transpose() * out.g * model.j_coord(x) * out.full;

  out.c.assign(N, Mat::Zero(N, N));
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) {
      const Vec bracket =
          d_full[b] * out.full.col(a) - d_full[a] * out.full.col(b);
      const Vec comps = out.full.transpose() * (out.g * bracket);
      out.c[a].row(b) = comps.transpose();
      out.c[b].row(a) = -comps.transpose();
    }
  return out;
}

// ===========================================================================
// Least-squares solve of the structure equations
// ===========================================================================

struct AxiomSolve {
  std::vector<Mat> gamma;  // gamma[a](b,c) = g(∇_{e_a} e_b, e_c)
  Mat a_frame;             // torsion components on the horizontal frame
  double lsq_residual;     // max-norm residual of the solved system
};

inline AxiomSolve solve_axioms(const ModelManifold& model,
                               const FrameField& section, const Vec& x) {
  const int N = model.dim();
  const int h = N - 1;
  const int T = N - 1;
  const FrameData fd = frame_data(model, section, x);

  const int n_gamma = N * N * N;
  const int n_unknown = n_gamma + h * h;
  auto gi = [N](int a, int b, int c) { return (a * N + b) * N + c; };
  auto ai = [n_gamma, h](int p, int q) { return n_gamma + p * h + q; };

  const int n_rows = n_gamma                  // metricity
                     + N * (N - 1) / 2 * N    // torsion, a < b
                     + n_gamma                // J parallel
                     + N * N                  // Reeb parallel
                     + 2 * h * h;             // torsion matrix shape
  Mat M = Mat::Zero(n_rows, n_unknown);
  Vec rhs = Vec::Zero(n_rows);
  int r = 0;

  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        M(r, gi(a, b, c)) += 1.0;
        M(r, gi(a, c, b)) += 1.0;
        ++r;
      }

  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        M(r, gi(a, b, c)) += 1.0;
        M(r, gi(b, a, c)) -= 1.0;
        rhs[r] = fd.c[a](b, c);
        if (c == T) rhs[r] += -2.0 * fd.j_frame(a, b);
        if (a == T && b < h && c < h) M(r, ai(b, c)) -= 1.0;
        if (b == T && a < h && c < h) M(r, ai(a, c)) += 1.0;
        ++r;
      }

  for (int a = 0; a < N; ++a)
    for (int d = 0; d < N; ++d)
      for (int b = 0; b < N; ++b) {
        for (int c = 0; c < N; ++c) {
          M(r, gi(a, d, c)) += fd.j_frame(c, b);
          M(r, gi(a, b, c)) += fd.j_frame(d, c);
        }
        ++r;
      }

  for (int a = 0; a < N; ++a)
    for (int c = 0; c < N; ++c) {
      M(r, gi(a, T, c)) = 1.0;
      ++r;
    }

  for (int p = 0; p < h; ++p)
    for (int q = 0; q < h; ++q) {
      M(r, ai(p, q)) += 1.0;
      M(r, ai(q, p)) -= 1.0;
      ++r;
      for (int s = 0; s < h; ++s) {
        M(r, ai(p, s)) += fd.j_frame(s, q);
        M(r, ai(s, q)) += fd.j_frame(p, s);
      }
      ++r;
    }

  const Vec sol = M.colPivHouseholderQr().solve(rhs);

  AxiomSolve out;
  out.gamma.assign(N, Mat::Zero(N, N));
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) out.gamma[a](b, c) = sol[gi(a, b, c)];
  out.a_frame = Mat::Zero(h, h);
  for (int p = 0; p < h; ++p)
    for (int q = 0; q < h; ++q) out.a_frame(p, q) = sol[ai(p, q)];
  out.lsq_residual = (M * sol - rhs).cwiseAbs().maxCoeff();
  return out;
}

// ===========================================================================
// Closed-form curvature of the unit sphere model
// ===========================================================================
//
//   R(X,Y)Z = g(Y,Z)X − g(X,Z)Y − (JX ∧ JY)Z + 2Ω(X,Y)JZ
//             − 2 g((θ∧I)(X,Y), Z) T + 2 θ(Z) (θ∧I)(X,Y)
//
// with (U ∧ V)W = g(U,W)V − g(V,W)U and (θ∧I)(X,Y) = (θ(X)Y − θ(Y)X)/2.

inline Vec sphere_curvature_closed_form(const ModelManifold& model,
                                        const Vec& x, const Vec& X,
                                        const Vec& Y, const Vec& Z) {
  const Mat g = model.metric_matrix(x);
  const Mat J = model.j_coord(x);
  const Vec th = model.theta(x);
  const Vec T = model.reeb(x);
  auto ip = [&](const Vec& u, const Vec& v) { return u.dot(g * v); };

  const Vec JX = J * X, JY = J * Y, JZ = J * Z;
  const Vec th_wedge = 0.5 * (th.dot(X) * Y - th.dot(Y) * X);

  Vec R = ip(Y, Z) * X - ip(X, Z) * Y;
  R -= ip(JX, Z) * JY - ip(JY, Z) * JX;
  R += 2.0 * ip(X, JY) * JZ;
  R -= 2.0 * ip(th_wedge, Z) * T;
  R += 2.0 * th.dot(Z) * th_wedge;
  return R;
}

}  // namespace pseudoherm::oracles
