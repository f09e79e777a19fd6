#include "ccy/ricci.hpp"

#include <cmath>
#include <random>

#include "ccy/errors.hpp"

namespace ccy {

double VolumeForm::log_density(cplx z, cplx w) const {
  return (beta1 - 1.0) * std::log(std::norm(z)) +
         (beta2 - 1.0) * std::log(std::norm(w - a2 * z)) +
         (beta3 - 1.0) * std::log(std::norm(w - a3 * z));
}

RicciRegion region_of(const AnsatzParams& p, cplx z, cplx w, double mu_reg) {
  if (z == cplx{} && w == cplx{})
    throw DomainError("region is undefined at the origin");
  const PointFrame f = p.frame(z, w);
  const double r = f.r, R = f.R;
  const double ra = std::pow(r, p.alpha0);
  const double rg = std::pow(r, p.gamma / p.beta1);
  RicciRegion out{RicciRegionTag::V, mu_reg};
  if (R > mu_reg * r) out.tag = RicciRegionTag::I;
  else if (R > 2.0 * ra) out.tag = RicciRegionTag::II;
  else if (R > 0.5 * ra) out.tag = RicciRegionTag::III;
  else if (R > rg / mu_reg) out.tag = RicciRegionTag::IV;
  return out;
}

namespace {

// h of the exact product-cone region: e^{-h} = prod |1 - a_j z/w|^{2-2b_j}.
double h_cone_part(const AnsatzParams& p, cplx z, cplx w) {
  auto term = [&](cplx a, double b) {
    const cplx q = a * z / w;
    return std::log1p(-2.0 * q.real() + std::norm(q)) * (1.0 - b);
  };
  return -(term(p.pair.a2, p.beta2) + term(p.pair.a3, p.beta3));
}

}  // namespace

double ricci_potential(const AnsatzParams& p, cplx z, cplx w) {
  if (z == cplx{}) throw SingularPointError("on the line {z=0}");
  const PointFrame f = p.frame(z, w);
  if (f.s >= 2.0) {
    if (w == cplx{}) throw SingularPointError("frame degenerate");
    return h_cone_part(p, z, w);
  }
  const HermitianForm2 cone = product_cone_metric(p, z, w);
  const HermitianForm2 E = metric_deviation(p, z, w);
  if (f.s <= 1.0) {
    // det(cone + E) relative to b1^2 g^2 prod |l|^{2b-2}: in this region the
    // 22-slot identity g22 = |z|^{2g-2} dens makes the ratio 1 + E_tot with
    //   E_tot = |z|^{2g-2b1} (E1 - |E2|^2/dens) / b1^2.
    const double g22 = cone.g22 + E.g22;  // |z|^{2g-2} dens(xi), exact
    const double t1 = E.g11 / cone.g11;
    const double cross = std::norm(E.g12) / (cone.g11 * g22);
    const double e_tot = t1 - cross;
    if (e_tot <= -1.0)
      throw NonPositiveMetricError("non-positive determinant");
    return -std::log1p(e_tot);
  }
  // Transition: e^{-h} = e^{-h_cone} (1 + q).
  const double q = E.g11 / cone.g11 + E.g22 / cone.g22 +
                   (E.g11 * E.g22 - std::norm(E.g12)) / cone.det();
  if (q <= -1.0) throw NonPositiveMetricError("non-positive determinant");
  return h_cone_part(p, z, w) - std::log1p(q);
}

double delta_exponent(const AnsatzParams& p) {
  const double lo = 2.0 * p.gamma / p.beta1;
  const double hi =
      std::min(2.0 + 2.0 / p.beta1 - 2.0 / p.gamma,
               2.0 / p.beta1 - 2.0 * (1.0 / p.gamma - 1.0) * p.alpha0);
  if (!(lo < hi))
    throw DomainError(
        "the region I/II exponent interval is empty for this alpha0");
  return 0.5 * (lo + hi);
}

DecayFit decay_scan(const AnsatzParams& p, const OrbitSpec& orbit) {
  std::vector<double> lx, ly;
  double rho_min = 1e300, rho_max = 0.0;
  for (int k = orbit.k_min; k <= orbit.k_max; ++k) {
    cplx z, w;
    if (orbit.mode == OrbitSpec::Mode::Dilation) {
      const double lam = std::pow(orbit.lambda, k);
      z = std::pow(lam, 1.0 / p.beta1) * orbit.z0;
      w = std::pow(lam, 1.0 / p.gamma) * orbit.w0;
    } else {
      const double t = orbit.t0 * std::pow(orbit.lambda, k);
      const double R = orbit.seam_c * std::pow(t, p.alpha0);
      z = std::pow(t, 1.0 / p.beta1) *
          cplx{std::cos(orbit.theta_z), std::sin(orbit.theta_z)};
      w = std::pow(R, 1.0 / p.gamma) *
          cplx{std::cos(orbit.theta_w), std::sin(orbit.theta_w)};
    }
    if (z == cplx{}) continue;
    double h;
    try {
      h = ricci_potential(p, z, w);
    } catch (const SingularPointError&) {
      continue;
    }
    const double rho = p.frame(z, w).rho;
    if (!(std::abs(h) > 0.0) || !std::isfinite(h) || rho <= 0.0) continue;
    double val = std::abs(h);
    if (orbit.log_correction) {
      if (rho >= 1.0) continue;
      val /= -std::log(rho);
    }
    lx.push_back(std::log(rho));
    ly.push_back(std::log(val));
    rho_min = std::min(rho_min, rho);
    rho_max = std::max(rho_max, rho);
  }
  if (lx.size() < 5) throw FitError("fewer than 5 usable orbit samples");
  const LineFit lf = fit_line(lx, ly);
  DecayFit out;
  out.slope = lf.slope;
  out.intercept = lf.intercept;
  out.r2 = lf.r2;
  out.rho_min = rho_min;
  out.rho_max = rho_max;
  out.log_correction = orbit.log_correction;
  out.n = lf.n;
  return out;
}

GlobalBound global_h_bound(const AnsatzParams& p, double eps, int samples,
                           unsigned long long seed, double rho_min,
                           double rho_max, int workers) {
  std::vector<double> ratios(samples, 0.0);
  parallel_for(
      static_cast<std::size_t>(samples),
      [&](std::size_t i) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (i + 1));
        std::uniform_real_distribution<double> un(0.0, 1.0);
        for (int attempt = 0; attempt < 64; ++attempt) {
          const double rho =
              rho_min * std::pow(rho_max / rho_min, un(rng));
          const double psi_angle = 0.5 * kPi * un(rng);
          const double r = rho * std::cos(psi_angle);
          const double R = rho * std::sin(psi_angle);
          const double thz = 2.0 * kPi * un(rng);
          const double thw = 2.0 * kPi * un(rng);
          const cplx z = std::pow(r, 1.0 / p.beta1) *
                         cplx{std::cos(thz), std::sin(thz)};
          const cplx w = std::pow(R, 1.0 / p.gamma) *
                         cplx{std::cos(thw), std::sin(thw)};
          if (z == cplx{}) continue;
          // keep a relative margin from the conical lines
          const cplx xi = w / z;
          if (std::abs(xi - p.pair.a2) < 1e-3 ||
              std::abs(xi - p.pair.a3) < 1e-3)
            continue;
          try {
            const double h = ricci_potential(p, z, w);
            ratios[i] = std::abs(h) / std::pow(rho, eps);
          } catch (const SingularPointError&) {
            continue;
          } catch (const QuadratureError&) {
            continue;
          }
          return;
        }
      },
      workers);
  GlobalBound out;
  out.eps = eps;
  out.samples = samples;
  out.rho_min = rho_min;
  out.rho_max = rho_max;
  for (double v : ratios) out.C = std::max(out.C, v);
  return out;
}

}  // namespace ccy
