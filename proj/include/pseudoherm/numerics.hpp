#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "pseudoherm/types.hpp"

namespace pseudoherm {

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

// Central difference f'(x), O(h^2).
template <class F>
double central_diff(const F& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Richardson-extrapolated central difference, O(h^4):
// (4 D(h/2) - D(h)) / 3.
template <class F>
double richardson_diff(const F& f, double x, double h) {
  const double d1 = central_diff(f, x, h);
  const double d2 = central_diff(f, x, 0.5 * h);
  return (4.0 * d2 - d1) / 3.0;
}

// Vector-valued variants.
template <class F>
Vec central_diff_vec(const F& f, double x, double h) {
  return ((f(x + h) - f(x - h)) / (2.0 * h)).eval();
}

template <class F>
Vec richardson_diff_vec(const F& f, double x, double h) {
  const Vec d1 = central_diff_vec(f, x, h);
  const Vec d2 = central_diff_vec(f, x, 0.5 * h);
  return ((4.0 * d2 - d1) / 3.0).eval();
}

// Matrix-valued variants.
template <class F>
Mat central_diff_mat(const F& f, double x, double h) {
  return ((f(x + h) - f(x - h)) / (2.0 * h)).eval();
}

template <class F>
Mat richardson_diff_mat(const F& f, double x, double h) {
  const Mat d1 = central_diff_mat(f, x, h);
  const Mat d2 = central_diff_mat(f, x, 0.5 * h);
  return ((4.0 * d2 - d1) / 3.0).eval();
}

// Five-point central first derivative, O(h^4); used for t-derivatives of
// curve families where each evaluation is itself an ODE solve.
template <class F>
Vec five_point_diff_vec(const F& f, double x, double h) {
  return ((f(x - 2 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2 * h)) /
          (12.0 * h))
      .eval();
}

// Second central difference f''(x), O(h^2).
template <class F>
double second_central_diff(const F& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Per-coordinate step scaled to the magnitude of the coordinate.
inline double fd_step(double coord, double h0) {
  return h0 * std::max(1.0, std::abs(coord));
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

// Composite Simpson rule with n panels (n rounded up to even).
template <class F>
double simpson(const F& f, double a, double b, int n) {
  if (n < 2) n = 2;
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// ---------------------------------------------------------------------------
// ODE integration (classical RK4, fixed step)
// ---------------------------------------------------------------------------

// One RK4 step for y' = f(t, y).
template <class F>
Vec rk4_step(const F& f, double t, const Vec& y, double h) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + 0.5 * h, (y + 0.5 * h * k1).eval());
  const Vec k3 = f(t + 0.5 * h, (y + 0.5 * h * k2).eval());
  const Vec k4 = f(t + h, (y + h * k3).eval());
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// ---------------------------------------------------------------------------
// Dense output: cubic Hermite interpolation on a uniform-ish grid
// ---------------------------------------------------------------------------

// Hermite basis evaluation on [t0, t1] given endpoint values and derivatives.
inline Vec hermite_eval(double t, double t0, double t1, const Vec& y0,
                        const Vec& y1, const Vec& d0, const Vec& d1) {
  const double dt = t1 - t0;
  const double s = (t - t0) / dt;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * y0 + (h10 * dt) * d0 + h01 * y1 + (h11 * dt) * d1;
}

// Derivative of the cubic Hermite interpolant at t.
inline Vec hermite_eval_deriv(double t, double t0, double t1, const Vec& y0,
                              const Vec& y1, const Vec& d0, const Vec& d1) {
  const double dt = t1 - t0;
  const double s = (t - t0) / dt;
  const double s2 = s * s;
  const double g00 = (6 * s2 - 6 * s) / dt;
  const double g10 = 3 * s2 - 4 * s + 1;
  const double g01 = (-6 * s2 + 6 * s) / dt;
  const double g11 = 3 * s2 - 2 * s;
  return g00 * y0 + g10 * d0 + g01 * y1 + g11 * d1;
}

// Locate the grid cell containing t. Grid must be strictly increasing.
inline int grid_cell(const std::vector<double>& grid, double t) {
  const int n = static_cast<int>(grid.size());
  if (t <= grid.front()) return 0;
  if (t >= grid.back()) return n - 2;
  int lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (grid[mid] <= t ? lo : hi) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Root refinement
// ---------------------------------------------------------------------------

// Bisection for a sign change of f on [a, b]; |b - a| shrunk below tol.
template <class F>
double bisect(const F& f, double a, double b, double fa, double fb,
              double tol) {
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fa < 0.0) != (fm < 0.0)) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

// Golden-section minimizer for a unimodal f on [a, b].
template <class F>
double golden_min(const F& f, double a, double b, double tol) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Quasi-random sampling (Halton sequence)
// ---------------------------------------------------------------------------

// Radical-inverse of index in the given base; in (0, 1).
inline double halton(std::uint64_t index, std::uint32_t base) {
  double f = 1.0, r = 0.0;
  for (std::uint64_t i = index + 1; i > 0; i /= base) {
    f /= base;
    r += f * static_cast<double>(i % base);
  }
  return r;
}

// Deterministic low-discrepancy points in the box [-2, 2]^dim. The seed
// offsets the sequence so distinct suites draw distinct points.
inline std::vector<Vec> halton_box_points(int dim, int count,
                                          std::uint64_t seed) {
  static const std::uint32_t primes[] = {2,  3,  5,  7,  11, 13,
                                         17, 19, 23, 29, 31, 37};
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int k = 0; k < count; ++k) {
    Vec p(dim);
    for (int d = 0; d < dim; ++d)
      p[d] = 4.0 * halton(seed + k, primes[d % 12]) - 2.0;
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace pseudoherm
