#pragma once

#include <vector>

#include "ccy/ansatz.hpp"

namespace ccy {

// Multi-valued holomorphic volume-form data: the line equations and the
// conical exponents. density(z,w) is the product |l_j|^{2 b_j - 2}, the
// Calabi-Yau target for det(omega) up to the normalization b1^2 g^2.
struct VolumeForm {
  double beta1, beta2, beta3;
  cplx a2, a3;

  static VolumeForm from(const AnsatzParams& p) {
    return {p.beta1, p.beta2, p.beta3, p.pair.a2, p.pair.a3};
  }
  double log_density(cplx z, cplx w) const;
  double density(cplx z, cplx w) const { return std::exp(log_density(z, w)); }
};

enum class RicciRegionTag { I = 1, II, III, IV, V };

struct RicciRegion {
  RicciRegionTag tag;
  double mu_reg;
};

inline constexpr double kDefaultMuReg = 0.1;

// Deterministic region tag by the stated inequalities; overlap collars
// resolve to the lower-numbered tag.
RicciRegion region_of(const AnsatzParams& p, cplx z, cplx w,
                      double mu_reg = kDefaultMuReg);

// Ricci potential h with omega^2 = e^{-h} Omega wedge conj(Omega):
//   h = -log( det(metric) / (b1^2 g^2 prod |l_j|^{2 b_j - 2}) ).
// Assembled from the cone part and the metric deviation so h keeps relative
// accuracy when it is tiny. Throws on the lines; NonPositiveMetricError when
// the determinant is not positive.
double ricci_potential(const AnsatzParams& p, cplx z, cplx w);

// Region-I exponent delta, fixed at the midpoint of the admissible interval
// (2 g/b1, min(2 + 2/b1 - 2/g, 2/b1 - 2 (1/g - 1) alpha0)); throws
// DomainError when the interval is empty for the given alpha0.
double delta_exponent(const AnsatzParams& p);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double rho_min = 0.0, rho_max = 0.0;  // fit window
  bool log_correction = false;
  int n = 0;
};

struct OrbitSpec {
  enum class Mode { Dilation, Seam } mode = Mode::Dilation;
  // Dilation: points D_{lambda^k}(z0, w0).
  cplx z0{0.01, 0.0}, w0{};
  // Seam: r = t, R = seam_c t^{alpha0} with t = t0 lambda^k, fixed phases.
  double seam_c = 1.0;
  double t0 = 0.2;
  double theta_z = 0.3, theta_w = 1.1;
  double lambda = 0.65;
  int k_min = 0, k_max = 14;
  bool log_correction = false;
};

// Fits log|h| against log rho along the orbit; with log_correction set the
// values are divided by (-log rho) first. FitError when fewer than 5 samples
// survive.
DecayFit decay_scan(const AnsatzParams& p, const OrbitSpec& orbit);

// C = max |h| / rho^eps over a quasi-random cloud avoiding the lines.
struct GlobalBound {
  double C = 0.0;
  double eps = 0.0;
  int samples = 0;
  double rho_min = 0.0, rho_max = 0.0;
};
GlobalBound global_h_bound(const AnsatzParams& p, double eps, int samples,
                           unsigned long long seed, double rho_min = 1e-4,
                           double rho_max = 0.2, int workers = 1);

}  // namespace ccy
