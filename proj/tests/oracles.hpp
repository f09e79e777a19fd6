#pragma once

// Test-only reference computations. These deliberately avoid the library's
// quadrature machinery: plain angular averages on full circles, adaptive
// Simpson in the radius, and Richardson extrapolation in the outer cutoff.

#include <cmath>
#include <functional>

#include "ccy/flatcone.hpp"
#include "ccy/util.hpp"

namespace oracle {

using ccy::cplx;

inline double theta_average(const std::function<double(cplx)>& f, double r,
                            double tol = 1e-12, int max_nodes = 1 << 14) {
  double prev = 0.0;
  for (int n = 64; n <= max_nodes; n *= 2) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double th = 2.0 * ccy::kPi * (j + 0.5) / n;
      acc += f(r * cplx{std::cos(th), std::sin(th)});
    }
    acc /= n;
    if (n > 64 && std::abs(acc - prev) < tol * (1.0 + std::abs(acc)))
      return acc;
    prev = acc;
  }
  return prev;
}

inline double adaptive_simpson(const std::function<double(double)>& g,
                               double a, double b, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double fa = g(a), fm = g(m), fb = g(b);
  std::function<double(double, double, double, double, double, double, int)>
      rec = [&](double x0, double x2, double f0, double f1, double f2,
                double whole, int d) -> double {
    const double x1l = 0.5 * (x0 + 0.5 * (x0 + x2));
    const double xm = 0.5 * (x0 + x2);
    const double x1r = 0.5 * (xm + x2);
    const double fl = g(x1l), fr = g(x1r);
    const double left = (xm - x0) / 6.0 * (f0 + 4.0 * fl + f1);
    const double right = (x2 - xm) / 6.0 * (f1 + 4.0 * fr + f2);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return rec(x0, xm, f0, fl, f1, left, d - 1) +
           rec(xm, x2, f1, fr, f2, right, d - 1);
  };
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(a, b, fa, fm, fb, whole, depth);
}

// Int over C of f dmu, dmu = 2 dA, for the two-cone-point difference
// density. Full circles cancel the slow quadrupole tail, so the remainder
// beyond S decays like S^{2 gamma - 4} and two Richardson steps remove it.
inline double flat_A_integral(const ccy::ConePair& p, double S = 96.0) {
  auto f = [&](cplx t) {
    return std::pow(std::norm(t - p.a2), p.beta2 - 1.0) *
               std::pow(std::norm(t - p.a3), p.beta3 - 1.0) -
           std::pow(std::norm(t), p.gamma - 1.0);
  };
  auto radial = [&](double r) {
    if (r <= 0.0) return 0.0;
    return 2.0 * ccy::kPi * theta_average(f, r) * 2.0 * r;
  };
  // Split the radial line at the singular radii.
  std::vector<double> cuts{0.0, std::abs(p.a2), std::abs(p.a3)};
  auto run = [&](double upto) {
    std::vector<double> c = cuts;
    c.push_back(upto);
    std::sort(c.begin(), c.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      if (c[i + 1] - c[i] < 1e-12) continue;
      // nudge off the exact singular radii
      const double a = c[i] + 1e-9 * (c[i + 1] - c[i]);
      const double b = c[i + 1] - 1e-9 * (c[i + 1] - c[i]);
      acc += adaptive_simpson(radial, a, b, 1e-11, 28);
    }
    return acc;
  };
  const double i1 = run(S), i2 = run(2.0 * S), i4 = run(4.0 * S);
  const double d1 = i2 - i1, d2 = i4 - i2;
  if (std::abs(d2) < 1e-14) return i4;
  const double ratio = d1 / d2;  // ~ 2^p
  return i4 + d2 / (ratio - 1.0);
}

inline double flat_A(const ccy::ConePair& p, double S = 96.0) {
  return p.gamma * p.gamma / ccy::kPi * flat_A_integral(p, S);
}

// Five-point FD Laplacian of a scalar field on C.
inline double fd_laplacian(const std::function<double(cplx)>& f, cplx w,
                           double h) {
  return (f(w + h) + f(w - h) + f(w + cplx{0, h}) + f(w - cplx{0, h}) -
          4.0 * f(w)) /
         (h * h);
}

}  // namespace oracle
