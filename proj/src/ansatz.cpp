#include "ccy/ansatz.hpp"

#include <cmath>
#include <limits>

#include "ccy/errors.hpp"

namespace ccy {

CutoffPair cutoff(double s) {
  if (s < 0.0) throw DomainError("cutoff argument must be nonnegative");
  const Smooth sm = smoothstep5(s - 1.0);
  return {sm.v, 1.0 - sm.v, sm.d1, sm.d2};
}

AnsatzParams AnsatzParams::make(const AngleConfig& config, double alpha0,
                                QuadratureSpec quad, double pair_scale) {
  if (config.d() != 3)
    throw NotModeledError(
        "the evaluated ansatz covers the three-line configuration; higher d "
        "is validated at the angle level only");
  const ConePair pair =
      ConePair::centered(config.betas[1], config.betas[2], pair_scale);
  return make_with_pair(config, alpha0, pair, quad);
}

AnsatzParams AnsatzParams::make_with_pair(const AngleConfig& config,
                                          double alpha0, const ConePair& pair,
                                          QuadratureSpec quad) {
  if (config.d() != 3)
    throw NotModeledError("three-line configurations only");
  if (!config.strict_instability || !config.gamma_in_range)
    throw DomainError("configuration must satisfy the strict angle condition");
  AnsatzParams p;
  p.config = config;
  p.pair = pair;
  p.beta1 = config.betas[0];
  p.beta2 = config.betas[1];
  p.beta3 = config.betas[2];
  p.gamma = config.gamma;
  if (std::abs(pair.beta2 - p.beta2) > 1e-13 ||
      std::abs(pair.beta3 - p.beta3) > 1e-13)
    throw DomainError("slice pair angles must match the configuration");
  if (!(alpha0 > 1.0 && alpha0 < p.gamma / p.beta1))
    throw DomainError("alpha0 must lie in (1, gamma/beta1)");
  p.alpha0 = alpha0;
  p.kappa = alpha0 * p.beta1 / p.gamma;
  p.quad = quad;
  p.flat = shared_flat_metric(pair, quad);
  p.A = p.flat->asymptotic_constant();
  return p;
}

AnsatzParams AnsatzParams::renormalized() const {
  const double prod = pow_abs(pair.a2, 2.0 - 2.0 * beta2) *
                      pow_abs(pair.a3, 2.0 - 2.0 * beta3);
  const double lambda = std::pow(prod, -1.0 / (2.0 - 2.0 * gamma));
  return make_with_pair(config, alpha0, pair.rescaled(lambda), quad);
}

PointFrame AnsatzParams::frame(cplx z, cplx w) const {
  PointFrame f;
  f.r = pow_abs(z, beta1);
  f.R = pow_abs(w, gamma);
  f.rho = std::hypot(f.r, f.R);
  if (z == cplx{}) {
    f.s = w == cplx{} ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    f.s = f.R * std::pow(f.r, -alpha0);
    f.xi = w / z;
    f.xi_valid = true;
  }
  return f;
}

namespace {

// Combinations of phi, dphi and the slice density entering the metric.
// In the far regime the pure-cone parts of each combination cancel exactly,
// so they are assembled from the A log + phi0 split instead.
struct SliceEval {
  double E1 = 0;        // g^2 phi - 2 g Re(xi phi_xi) + |xi|^2 dens
  cplx E2{};            // g conj(phi_xi) - xi dens
  double dens = 0;      // phi_{xi xibar}, closed form
  double phi = 0;
  double u_factor = 0;  // |xi|^{2g} - phi,  u = |z|^{2g} u_factor
  double gphi_m = 0;    // g phi - 2 Re(xi phi_xi), cone part removed
  cplx uw_factor{};     // g |xi|^{2g-2} conj(xi) - phi_xi, cone part removed
};

SliceEval eval_slice(const AnsatzParams& p, cplx xi) {
  const double g = p.gamma;
  SliceEval e;
  e.dens = g * g * std::pow(std::norm(xi - p.pair.a2), p.beta2 - 1.0) *
           std::pow(std::norm(xi - p.pair.a3), p.beta3 - 1.0);
  const PhiEval pe = p.flat->fast_eval(xi);
  e.phi = pe.phi;
  if (pe.asymptotic) {
    const double logr = 0.5 * std::log(std::norm(xi));
    const double dens_res = e.dens - g * g * std::pow(std::norm(xi), g - 1.0);
    const double core = p.A * logr + pe.phi0;
    const double xdp0 = (xi * pe.dphi0).real();
    e.E1 = g * g * core - g * (p.A + 2.0 * xdp0) + std::norm(xi) * dens_res;
    e.E2 = g * (0.5 * p.A * xi / std::norm(xi) + std::conj(pe.dphi0)) -
           xi * dens_res;
    e.u_factor = -core;
    e.gphi_m = g * core - 0.5 * p.A - 2.0 * xdp0;
    e.uw_factor = -0.5 * p.A / xi - pe.dphi0;
  } else {
    const double r2g = std::pow(std::norm(xi), g);
    const double xdp = (xi * pe.dphi).real();
    e.E1 = g * g * pe.phi - 2.0 * g * xdp + std::norm(xi) * e.dens;
    e.E2 = g * std::conj(pe.dphi) - xi * e.dens;
    e.u_factor = r2g - pe.phi;
    e.gphi_m = g * pe.phi - 2.0 * xdp;
    e.uw_factor =
        (xi == cplx{} ? cplx{}
                      : g * std::pow(std::norm(xi), g - 1.0) * std::conj(xi)) -
        pe.dphi;
  }
  return e;
}

void check_off_lines(const AnsatzParams& p, cplx z, cplx w) {
  if (z == cplx{}) throw SingularPointError("on the line {z=0}");
  const cplx xi = w / z;
  if (xi == p.pair.a2 || xi == p.pair.a3)
    throw SingularPointError("on a conical line {w = a z}");
}

}  // namespace

double potential_psi(const AnsatzParams& p, cplx z, cplx w) {
  const double zb1 = std::pow(std::norm(z), p.beta1);
  const double w2g = std::pow(std::norm(w), p.gamma);
  if (z == cplx{}) return zb1 + w2g;  // extends continuously over {z=0}
  const PointFrame f = p.frame(z, w);
  if (f.s >= 2.0) return zb1 + w2g;
  const double z2g = std::pow(std::norm(z), p.gamma);
  if (f.s <= 1.0) return zb1 + z2g * p.flat->fast_eval(f.xi).phi;
  const SliceEval e = eval_slice(p, f.xi);
  const CutoffPair c = cutoff(f.s);
  return zb1 + z2g * e.phi + c.chi1 * z2g * e.u_factor;
}

HermitianForm2 product_cone_metric(const AnsatzParams& p, cplx z, cplx w) {
  return {p.beta1 * p.beta1 * std::pow(std::norm(z), p.beta1 - 1.0),
          p.gamma * p.gamma * std::pow(std::norm(w), p.gamma - 1.0), cplx{}};
}

HermitianForm2 metric_deviation(const AnsatzParams& p, cplx z, cplx w) {
  const PointFrame f = p.frame(z, w);
  const double b1 = p.beta1, g = p.gamma;
  if (z == cplx{}) throw SingularPointError("on the line {z=0}");
  if (f.s >= 2.0) return {};
  check_off_lines(p, z, w);
  const SliceEval e = eval_slice(p, f.xi);
  const double z2g2 = std::pow(std::norm(z), g - 1.0);  // |z|^{2g-2}
  const double dens_res =
      e.dens - g * g * std::pow(std::norm(f.xi), g - 1.0);
  HermitianForm2 E{z2g2 * e.E1, z2g2 * dens_res, z2g2 * e.E2};
  if (f.s <= 1.0) return E;

  // Transition: metric = cone + (1 - chi1) (H(psi2) - H(|w|^{2g})) + chi'
  // and chi'' terms of chi1(s) u, u = |w|^{2g} - psi2.
  const CutoffPair c = cutoff(f.s);
  E = E.scaled(c.chi2);
  const double z2g = std::pow(std::norm(z), g);
  const double u = z2g * e.u_factor;
  const cplx u_z = -(z2g / z) * e.gphi_m;
  const cplx u_w = (z2g / z) * e.uw_factor;
  const double s = f.s;
  const cplx s_z = -0.5 * p.alpha0 * b1 * s / z;
  const cplx s_w = 0.5 * g * s / w;
  const double s_zz = sqr(0.5 * p.alpha0 * b1) * s / std::norm(z);
  const double s_ww = sqr(0.5 * g) * s / std::norm(w);
  const cplx s_zw = -0.25 * p.alpha0 * b1 * g * s / (z * std::conj(w));

  E.g11 += 2.0 * c.d1 * (s_z * std::conj(u_z)).real() +
           u * (c.d2 * std::norm(s_z) + c.d1 * s_zz);
  E.g22 += 2.0 * c.d1 * (s_w * std::conj(u_w)).real() +
           u * (c.d2 * std::norm(s_w) + c.d1 * s_ww);
  E.g12 += c.d1 * (s_z * std::conj(u_w) + u_z * std::conj(s_w)) +
           u * (c.d2 * s_z * std::conj(s_w) + c.d1 * s_zw);
  return E;
}

HermitianForm2 metric(const AnsatzParams& p, cplx z, cplx w) {
  const PointFrame f = p.frame(z, w);
  if (z == cplx{}) throw SingularPointError("on the line {z=0}");
  if (f.s >= 2.0) return product_cone_metric(p, z, w);
  return product_cone_metric(p, z, w) + metric_deviation(p, z, w);
}

HermitianForm2 hermitian_model(const AnsatzParams& p, cplx z, cplx w) {
  check_off_lines(p, z, w);
  const double b1 = p.beta1, g = p.gamma;
  return {b1 * b1 * std::pow(std::norm(z), b1 - 1.0),
          g * g * std::pow(std::norm(w - p.pair.a2 * z), p.beta2 - 1.0) *
              std::pow(std::norm(w - p.pair.a3 * z), p.beta3 - 1.0),
          cplx{}};
}

double probe_transverse(const MetricField& g, cplx base_z, cplx base_w,
                        cplx normal_z, cplx normal_w, double s) {
  const double nn = std::sqrt(std::norm(normal_z) + std::norm(normal_w));
  const cplx nz = normal_z / nn, nw = normal_w / nn;

  // Metric radius along the theta = 0 ray as a function of the Euclidean
  // radius, graded towards the line (integrand ~ t^{b-1}).
  auto radius = [&](double eps) {
    static const double gx[4] = {0.06943184420297371, 0.33000947820757187,
                                 0.66999052179242813, 0.93056815579702629};
    static const double gw[4] = {0.17392742256872693, 0.32607257743127307,
                                 0.32607257743127307, 0.17392742256872693};
    double acc = 0.0;
    double hi = eps;
    for (int l = 0; l < 44 && hi > 1e-13 * eps; ++l) {
      const double lo = hi * 0.5;
      for (int q = 0; q < 4; ++q) {
        const double t = lo + (hi - lo) * gx[q];
        const HermitianForm2 m = g(base_z + t * nz, base_w + t * nw);
        acc += gw[q] * (hi - lo) * std::sqrt(m.length2(nz, nw));
      }
      hi = lo;
    }
    return acc;
  };

  double eps = s;
  double r0 = radius(eps);
  for (int it = 0; it < 80 && std::abs(r0 / s - 1.0) > 1e-10; ++it) {
    eps *= std::pow(s / r0, 0.9);
    r0 = radius(eps);
  }

  double circ = 0.0;
  const int nth = 512;
  for (int j = 0; j < nth; ++j) {
    const double th = 2.0 * kPi * (j + 0.5) / nth;
    const cplx e{std::cos(th), std::sin(th)};
    const HermitianForm2 m = g(base_z + eps * e * nz, base_w + eps * e * nw);
    circ += eps *
            std::sqrt(m.length2(cplx{0, 1} * e * nz, cplx{0, 1} * e * nw)) *
            (2.0 * kPi / nth);
  }
  return circ / r0;
}

double cone_angle_probe(const AnsatzParams& p, int line, cplx base_coord,
                        double s) {
  if (s <= 0.0) throw ProbeError("probe radius must be positive");
  if (base_coord == cplx{}) throw ProbeError("base must avoid the origin");
  auto field = [&](cplx z, cplx w) { return metric(p, z, w); };
  switch (line) {
    case 1: {  // {z = 0}: transverse in z; the product form must hold
      const double eps_guess = std::pow(s, 1.0 / p.beta1);
      const PointFrame f = p.frame(eps_guess, base_coord);
      if (f.s < 2.5)
        throw ProbeError("probe radius too large for the product region");
      return probe_transverse(field, cplx{}, base_coord, cplx{1, 0}, cplx{},
                              s);
    }
    case 2:
    case 3: {  // {w = a z}: transverse in w
      const cplx a = line == 2 ? p.pair.a2 : p.pair.a3;
      return probe_transverse(field, base_coord, a * base_coord, cplx{},
                              cplx{1, 0}, s);
    }
    case 0:  // smooth axis {w = 0}
      return probe_transverse(field, base_coord, cplx{}, cplx{}, cplx{1, 0},
                              s);
    default:
      throw ProbeError("line index must be 0, 1, 2 or 3");
  }
}

HermitianForm2 cusp_pullback(const AnsatzParams& p, const PowerPullback& pb,
                             cplx u, cplx v) {
  // (u, v) -> (z, w) = (u^m, v^n) -> (Z, W) = (w, z - c w): the lines
  // {w=0}, {z=0}, {z=w} land on {Z=0}, {W = a2 Z}, {W = a3 Z}.
  auto ipow = [](cplx x, int k) {
    cplx r{1, 0};
    for (int i = 0; i < k; ++i) r *= x;
    return r;
  };
  const cplx z = ipow(u, pb.m), w = ipow(v, pb.n);
  const cplx dz = static_cast<double>(pb.m) * ipow(u, pb.m - 1);
  const cplx dw = static_cast<double>(pb.n) * ipow(v, pb.n - 1);
  const cplx Z = pb.shear == 0.0 && pb.m == 1 && pb.n == 1 ? z : w;
  const cplx W = pb.shear == 0.0 && pb.m == 1 && pb.n == 1
                     ? w
                     : z - pb.shear * w;
  cplx Zu{}, Zv = dw, Wu = dz, Wv = -pb.shear * dw;
  if (pb.shear == 0.0 && pb.m == 1 && pb.n == 1) {
    Zu = dz;
    Zv = cplx{};
    Wu = cplx{};
    Wv = dw;
  }
  const HermitianForm2 g = metric(p, Z, W);
  HermitianForm2 out;
  out.g11 = g.g11 * std::norm(Zu) + g.g22 * std::norm(Wu) +
            2.0 * (g.g12 * Zu * std::conj(Wu)).real();
  out.g22 = g.g11 * std::norm(Zv) + g.g22 * std::norm(Wv) +
            2.0 * (g.g12 * Zv * std::conj(Wv)).real();
  out.g12 = g.g11 * Zu * std::conj(Zv) + g.g22 * Wu * std::conj(Wv) +
            g.g12 * Zu * std::conj(Wv) +
            std::conj(g.g12) * Wu * std::conj(Zv);
  return out;
}

CuspAnsatz make_cusp_ansatz(const CuspConfig& cusp, QuadratureSpec quad) {
  CuspAnsatz out;
  out.cusp = cusp;
  const double b2 = 1.0 / cusp.m, b3 = cusp.beta;
  const double c = (1.0 - b3) / ((1.0 - b2) + (1.0 - b3));
  const ConePair pair = ConePair::make(b2, b3, {-c, 0.0}, {1.0 - c, 0.0});
  const double ratio = cusp.cover.gamma / cusp.cover.beta1();
  const double alpha0 = 0.5 * (1.0 + ratio);
  out.params = AnsatzParams::make_with_pair(cusp.cover, alpha0, pair, quad);
  out.cover = {cusp.m, cusp.n, c};
  return out;
}

}  // namespace ccy
