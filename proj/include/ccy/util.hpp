#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ccy {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Quintic smoothstep on [0,1]: value, first and second derivative.
// Used for every cutoff profile in the project; two continuous derivatives
// are required wherever chi'' enters a metric coefficient.
struct Smooth {
  double v, d1, d2;
};

inline Smooth smoothstep5(double x) {
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  if (x >= 1.0) return {1.0, 0.0, 0.0};
  const double x2 = x * x, x3 = x2 * x;
  return {x3 * (10.0 + x * (-15.0 + 6.0 * x)),
          30.0 * x2 * (1.0 + x * (-2.0 + x)),
          60.0 * x * (1.0 + x * (-3.0 + 2.0 * x))};
}

// Transition from 1 on [0, lo] down to 0 on [hi, inf).
inline Smooth fade_out(double t, double lo, double hi) {
  const double x = (t - lo) / (hi - lo);
  Smooth s = smoothstep5(x);
  const double j = 1.0 / (hi - lo);
  return {1.0 - s.v, -s.d1 * j, -s.d2 * j * j};
}

// Least-squares line fit y ~ intercept + slope * x with goodness r2.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Runs fn(i) for i in [0, n) across at most `workers` threads.
// workers <= 1 executes inline. Exceptions from workers are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int workers);

int default_workers();

// FNV-1a, used for config hashes in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

// Shortest printable round-trip representation of a double.
std::string format_double(double v);

inline double sqr(double x) { return x * x; }

// |a|^p via norm to avoid a complex abs, p is the exponent on |a| (not |a|^2).
inline double pow_abs(cplx a, double p) {
  return std::pow(std::norm(a), 0.5 * p);
}

}  // namespace ccy
