#include "ccy/flatcone.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>

#include "ccy/gridgeo.hpp"

namespace ccy {

namespace {

constexpr double kCentroidTol = 1e-14;
// t^k moments kept on both sides of the explicit band. The band boundary
// snaps to annulus edges as w moves; the truncation error at ratio 1/2.6
// sets the size of the resulting jump in phi, so the order is kept high
// enough that finite differences of phi never see it.
constexpr int kMoments = 25;
constexpr double kGradeKappa = 0.025;

double gl2_node(double a, double b, int i) {
  static const double x[2] = {0.21132486540518713, 0.78867513459481287};
  return a + (b - a) * x[i];
}

// Gauss-Legendre 8 on [0,1].
constexpr double kG8x[8] = {0.019855071751231856, 0.10166676129318664,
                            0.2372337950418355,  0.40828267875217505,
                            0.591717321247825,   0.7627662049581645,
                            0.8983332387068134,  0.9801449282487682};
constexpr double kG8w[8] = {0.05061426814518813, 0.11119051722668723,
                            0.15685332293894372, 0.18134189168918097,
                            0.18134189168918097, 0.15685332293894372,
                            0.11119051722668723, 0.05061426814518813};

}  // namespace

ConePair ConePair::make(double beta2, double beta3, cplx a2, cplx a3) {
  if (!(beta2 > 0.0 && beta2 < 1.0) || !(beta3 > 0.0 && beta3 < 1.0))
    throw DomainError("cone angle factors must lie in (0,1)");
  ConePair p;
  p.beta2 = beta2;
  p.beta3 = beta3;
  p.a2 = a2;
  p.a3 = a3;
  p.gamma = beta2 + beta3 - 1.0;
  if (!(p.gamma > 0.0))
    throw DomainError("beta2 + beta3 must exceed 1 (collapsed angle > 0)");
  const double scale = std::max({std::abs(a2), std::abs(a3), 1.0});
  if (std::abs((1.0 - beta2) * a2 + (1.0 - beta3) * a3) > kCentroidTol * scale)
    throw DomainError("weighted centre of mass must sit at zero");
  p.degenerate = a2 == cplx{} && a3 == cplx{};
  if (!p.degenerate && std::abs(a2 - a3) < kCentroidTol)
    throw DomainError("cone points must be distinct (or both zero)");
  return p;
}

ConePair ConePair::centered(double beta2, double beta3, double scale) {
  const cplx a2{scale, 0.0};
  const cplx a3{-scale * (1.0 - beta2) / (1.0 - beta3), 0.0};
  return make(beta2, beta3, a2, a3);
}

ConePair ConePair::collapsed(double beta2, double beta3) {
  return make(beta2, beta3, cplx{}, cplx{});
}

ConePair ConePair::rescaled(cplx mu) const {
  if (degenerate || mu == cplx{}) return collapsed(beta2, beta3);
  return make(beta2, beta3, mu * a2, mu * a3);
}

QuadratureSpec QuadratureSpec::scaled(double f) const {
  QuadratureSpec s = *this;
  s.annuli = std::max(32, static_cast<int>(std::lround(annuli * f)));
  s.nodes_per_annulus =
      std::max(16, static_cast<int>(std::lround(nodes_per_annulus * f)));
  s.patch_depth = std::max(8, static_cast<int>(std::lround(patch_depth * f)));
  return s;
}

QuadratureSpec QuadratureSpec::fast() {
  QuadratureSpec s;
  s.annuli = 320;
  s.nodes_per_annulus = 48;
  s.patch_depth = 32;
  s.agreement_target = 5e-4;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct RingCore {
  // Radial mass q(tau) = 4 pi coef tau^{2e-1} zeta(tau), zeta == 1 on
  // [0, fade_lo] fading to 0 at fade_hi = rho. Ring potentials are exact for
  // any evaluation point, so a core never contributes quadrature noise.
  cplx center;
  double coef = 0.0, expo = 0.0, rho = 0.0;
  double fade_lo = 0.0;
  std::vector<double> knots;  // geometric, knots.front() > 0
  std::vector<double> Q;      // cumulative Int q
  std::vector<double> QL;     // cumulative Int q log

  double zeta(double tau) const { return fade_out(tau, fade_lo, rho).v; }
  double q(double tau) const {
    return 4.0 * kPi * coef * std::pow(tau, 2.0 * expo - 1.0) * zeta(tau);
  }
  // Closed forms below the first knot, where zeta == 1.
  double q_int0(double s) const {
    return 4.0 * kPi * coef * std::pow(s, 2.0 * expo) / (2.0 * expo);
  }
  double ql_int0(double s) const {
    const double e2 = 2.0 * expo;
    return 4.0 * kPi * coef * std::pow(s, e2) * (std::log(s) - 1.0 / e2) / e2;
  }

  void build(int knot_count) {
    knots.resize(knot_count);
    const double t0 = rho * 1e-9;
    const double g = std::pow(rho / t0, 1.0 / (knot_count - 1));
    for (int i = 0; i < knot_count; ++i) knots[i] = t0 * std::pow(g, i);
    knots.back() = rho;
    Q.resize(knot_count);
    QL.resize(knot_count);
    Q[0] = q_int0(knots[0]);
    QL[0] = ql_int0(knots[0]);
    for (int i = 1; i < knot_count; ++i) {
      double dq = 0, dql = 0;
      for (int k = 0; k < 2; ++k) {
        const double t = gl2_node(knots[i - 1], knots[i], k);
        const double qq = q(t);
        dq += 0.5 * qq;
        dql += 0.5 * qq * std::log(t);
      }
      const double w = knots[i] - knots[i - 1];
      Q[i] = Q[i - 1] + dq * w;
      QL[i] = QL[i - 1] + dql * w;
    }
  }

  // Cumulatives at arbitrary s (clamped to [0, rho]).
  void at(double s, double& q_out, double& ql_out) const {
    if (s >= rho) {
      q_out = Q.back();
      ql_out = QL.back();
      return;
    }
    if (s <= knots.front()) {
      q_out = s > 0 ? q_int0(s) : 0.0;
      ql_out = s > 0 ? ql_int0(s) : 0.0;
      return;
    }
    const auto it = std::upper_bound(knots.begin(), knots.end(), s);
    const int i = static_cast<int>(it - knots.begin()) - 1;
    double dq = 0, dql = 0;
    for (int k = 0; k < 2; ++k) {
      const double t = gl2_node(knots[i], s, k);
      const double qq = q(t);
      dq += 0.5 * qq;
      dql += 0.5 * qq * std::log(t);
    }
    q_out = Q[i] + dq * (s - knots[i]);
    ql_out = QL[i] + dql * (s - knots[i]);
  }

  double total_mass() const { return Q.back(); }

  // Int over the core of log|w - t| dmu(t): ring potential.
  double log_potential(cplx w) const {
    const double s = std::abs(w - center);
    double qs, qls;
    at(s, qs, qls);
    const double inner = s > 0 ? std::log(s) * qs : 0.0;
    return inner + (QL.back() - qls);
  }
  cplx grad_potential(cplx w) const {
    const cplx d = w - center;
    const double s = std::abs(d);
    if (s == 0.0) return {};
    double qs, qls;
    at(s, qs, qls);
    return qs / (2.0 * d);
  }
};

struct MassNode {
  cplx t;
  double m;
};

struct PolarGrid {
  // Catmull-Rom interpolation on a uniform (r, theta) grid, periodic in
  // theta. Radial index -1 mirrors across the origin when mirror_center.
  double r0 = 0, r1 = 1;
  int nr = 0, nth = 0;
  bool mirror_center = false;
  std::vector<double> v;  // (nr+1) * nth

  double get(int i, int j) const {
    if (i < 0) {
      if (!mirror_center) i = 0;
      else {
        i = -i;
        j += nth / 2;
      }
    }
    if (i > nr) i = nr;
    j %= nth;
    if (j < 0) j += nth;
    return v[static_cast<std::size_t>(i) * nth + j];
  }

  static double cr(double fm1, double f0, double f1, double f2, double x) {
    const double a = -0.5 * fm1 + 1.5 * f0 - 1.5 * f1 + 0.5 * f2;
    const double b = fm1 - 2.5 * f0 + 2.0 * f1 - 0.5 * f2;
    const double c = -0.5 * fm1 + 0.5 * f1;
    return ((a * x + b) * x + c) * x + f0;
  }

  double at(double r, double th) const {
    const double xr = (r - r0) / (r1 - r0) * nr;
    const double xt = th / (2.0 * kPi) * nth;
    int ir = static_cast<int>(std::floor(xr));
    int it = static_cast<int>(std::floor(xt));
    ir = std::clamp(ir, 0, nr - 1);
    const double fr = xr - ir, ft = xt - it;
    double col[4];
    for (int a = -1; a <= 2; ++a) {
      col[a + 1] = cr(get(ir + a, it - 1), get(ir + a, it), get(ir + a, it + 1),
                      get(ir + a, it + 2), ft);
    }
    return cr(col[0], col[1], col[2], col[3], fr);
  }
};

}  // namespace

struct FlatMetric::Impl {
  ConePair pair;
  QuadratureSpec spec;
  double gamma = 0, b2 = 0, b3 = 0;
  double scale = 1;
  double T = 0, T_ext = 0;
  double window = 0.35;

  std::vector<RingCore> cores;
  double s_floor = 0;
  double grade_reach = 0;

  // Annuli, annulus-major. edges has annuli+1 entries; annulus a owns
  // ring_nodes[ann_offset[a], ann_offset[a+1]). Every cell carries a 2x2
  // Gauss rule. Cells near the cone points are subdivided until their size
  // is proportional to the distance; those leaves are routed into shell /
  // sector buckets around the nearest cone point, each carrying multipole
  // moments so distant evaluations never touch the individual nodes.
  std::vector<double> edges;
  std::vector<MassNode> ring_nodes;
  std::vector<std::size_t> ann_offset;
  int nth = 0;

  struct Bucket {
    cplx center;
    double radius = 0;
    double mass = 0;
    std::array<cplx, kMoments> mom{};  // Int N (t - center)^p
    std::vector<MassNode> nodes;
  };
  std::vector<Bucket> buckets;

  // prefix[a][k]: Int f t^k over annuli < a. suffix[a][k]: Int f t^{-k-1}
  // over annuli >= a plus the analytic tail; suffix_log / suffix_0 likewise
  // for kernels log|t| and 1.
  std::vector<std::array<cplx, kMoments>> prefix;
  std::vector<std::array<cplx, kMoments>> suffix;
  std::vector<double> suffix_log, suffix_0;

  int win_nr = 24, win_nth = 48;

  mutable std::once_flag tables_once;
  mutable PolarGrid inner_phi, inner_dre, inner_dim;
  mutable PolarGrid outer_p0, outer_dre, outer_dim;
  double xi0 = 0, xi_max = 0, fallback_radius = 0;
  mutable double A_cached = 0;
  mutable bool A_ready = false;
  mutable std::mutex a_mutex;

  double f(cplx t) const {
    const double t1 = std::pow(std::norm(t - pair.a2), b2 - 1.0) *
                      std::pow(std::norm(t - pair.a3), b3 - 1.0);
    return t1 - std::pow(std::norm(t), gamma - 1.0);
  }
  // Node-field integrand: f minus every ring-core density. The origin core
  // carries the full subtracted cone term out to its fade, so N has no
  // structure at the origin; at the cone points only the integrable kink
  // tau^{2 b - 1} survives.
  double N(cplx t) const {
    double v = std::pow(std::norm(t - pair.a2), b2 - 1.0) *
               std::pow(std::norm(t - pair.a3), b3 - 1.0);
    for (std::size_t j = 0; j + 1 < cores.size(); ++j) {
      const RingCore& c = cores[j];
      const double tau = std::abs(t - c.center);
      if (tau >= c.rho) continue;
      v -= c.coef * std::pow(tau, 2.0 * c.expo - 2.0) * c.zeta(tau);
    }
    const RingCore& c0 = cores.back();
    const double z0 = c0.zeta(std::abs(t));
    if (z0 < 1.0) v -= std::pow(std::norm(t), gamma - 1.0) * (1.0 - z0);
    return v;
  }
  double dist_pair(cplx t) const {
    return std::min(std::abs(t - pair.a2), std::abs(t - pair.a3));
  }
  // Smooth lower bound for dist_pair; the window radius must be a smooth
  // function of w or finite differences of phi pick up its kinks along the
  // bisector of the cone points.
  double dist_pair_smooth(cplx t) const {
    const double d2 = std::abs(t - pair.a2), d3 = std::abs(t - pair.a3);
    const double q2 = 1.0 / (d2 * d2), q3 = 1.0 / (d3 * d3);
    double s2 = q2 * q2, s3 = q3 * q3;
    s2 *= s2;
    s3 *= s3;  // d^{-8}
    return std::pow(s2 + s3, -0.125);
  }

  void build();
  void build_tables() const;
  struct Kernels {
    double logv = 0;
    cplx grad{};
  };
  Kernels convolve(cplx w, bool need_log, bool need_grad) const;
  double potential(cplx w) const;
  cplx gradient(cplx w) const;
  void both(cplx w, double& phi, cplx& dphi) const;
  double A_value() const;
};

void FlatMetric::Impl::build() {
  gamma = pair.gamma;
  b2 = pair.beta2;
  b3 = pair.beta3;
  scale = std::max({std::abs(pair.a2), std::abs(pair.a3), 1.0});
  const double Tmin = 10.0 * scale;
  T = spec.truncation_radius > 0 ? spec.truncation_radius
                                 : std::max(40.0, Tmin);
  if (T < Tmin)
    throw DomainError("truncation radius below 10 max(|a2|,|a3|,1)");
  window = 0.35 * scale;
  if (pair.degenerate) return;

  // Ring cores: the exact radial potentials. Cone-point cores carry the
  // leading tau^{2b-2} density with a wide fade; the origin core carries the
  // whole subtracted cone term out to the working region.
  const double d23 = std::abs(pair.a2 - pair.a3);
  auto add_core = [&](cplx c, double coef, double e, double lo, double hi) {
    RingCore rc;
    rc.center = c;
    rc.coef = coef;
    rc.expo = e;
    rc.fade_lo = lo;
    rc.rho = hi;
    rc.build(1600);
    cores.push_back(std::move(rc));
  };
  const double Rj = std::min(0.2 * scale, 0.45 * d23);
  add_core(pair.a2, pow_abs(pair.a2 - pair.a3, 2.0 * b3 - 2.0), b2,
           Rj / 3.0, Rj);
  add_core(pair.a3, pow_abs(pair.a3 - pair.a2, 2.0 * b2 - 2.0), b3,
           Rj / 3.0, Rj);
  const double X0 = 4.0 * scale;  // origin core must stay last in `cores`
  add_core(cplx{}, -1.0, gamma, 0.5 * X0, X0);
  s_floor = 2e-3 * scale;

  // Global annuli.
  xi0 = std::max(10.0, 8.0 * scale);
  xi_max = 1.2e4 * std::max(1.0, xi0 / 12.0);
  T_ext = std::max(2.6 * xi_max, 10.0 * T);
  const double r_in = 1e-5 * scale;
  const double dl = std::log(T / r_in) / spec.annuli;
  const int n_ann = static_cast<int>(std::ceil(std::log(T_ext / r_in) / dl));
  nth = spec.nodes_per_annulus;
  edges.resize(n_ann + 1);
  for (int a = 0; a <= n_ann; ++a) edges[a] = r_in * std::exp(dl * a);
  T_ext = edges.back();

  auto cell_sing_dist = [&](double r0, double r1, double th0, double th1) {
    const double rm = 0.5 * (r0 + r1), tm = 0.5 * (th0 + th1);
    const cplx c = rm * cplx{std::cos(tm), std::sin(tm)};
    const double half_diag = 0.5 * std::hypot(r1 - r0, rm * (th1 - th0));
    return std::max(0.0, dist_pair(c) - half_diag);
  };

  ann_offset.assign(n_ann + 1, 0);
  grade_reach = 3.2 * scale;
  const double dth = 2.0 * kPi / nth;
  static const double g2x[2] = {0.21132486540518713, 0.78867513459481287};

  // Shell/sector bucket layout around the cone points (half-octave shells,
  // 20 sectors: keeps bucket radii small enough that the multipole far test
  // passes for most of the field).
  const double shell0 = 0.1 * scale;
  const int n_shell =
      1 + static_cast<int>(std::ceil(2.0 * std::log2(grade_reach / shell0)));
  constexpr int kSectors = 20;
  buckets.assign(static_cast<std::size_t>(2) * n_shell * kSectors, {});
  auto route = [&](cplx t, double m) {
    const double da2 = std::abs(t - pair.a2), da3 = std::abs(t - pair.a3);
    const int j = da2 <= da3 ? 0 : 1;
    const cplx a = j == 0 ? pair.a2 : pair.a3;
    const double d = std::min(da2, da3);
    int k = d <= shell0
                ? 0
                : 1 + static_cast<int>(
                          std::floor(2.0 * std::log2(d / shell0)));
    k = std::clamp(k, 0, n_shell - 1);
    double th = std::arg(t - a) / (2.0 * kPi);
    th -= std::floor(th);
    const int s =
        std::min(kSectors - 1, static_cast<int>(th * kSectors));
    buckets[(static_cast<std::size_t>(j) * n_shell + k) * kSectors + s]
        .nodes.push_back({t, m});
  };

  std::function<void(double, double, double, double, int)> emit =
      [&](double r0, double r1, double th0, double th1, int depth) {
        const double size = std::max(r1 - r0, 0.5 * (r0 + r1) * (th1 - th0));
        const double d = cell_sing_dist(r0, r1, th0, th1);
        const double allowed =
            d > grade_reach ? 1e300 : std::max(s_floor, kGradeKappa * d);
        if (depth < 14 && size > allowed) {
          const double rm = 0.5 * (r0 + r1), tm = 0.5 * (th0 + th1);
          emit(r0, rm, th0, tm, depth + 1);
          emit(r0, rm, tm, th1, depth + 1);
          emit(rm, r1, th0, tm, depth + 1);
          emit(rm, r1, tm, th1, depth + 1);
          return;
        }
        // 2x2 Gauss in (r, theta); measure 2 r dr dtheta.
        for (int gi = 0; gi < 2; ++gi)
          for (int gj = 0; gj < 2; ++gj) {
            const double r = r0 + (r1 - r0) * g2x[gi];
            const double th = th0 + (th1 - th0) * g2x[gj];
            const cplx t = r * cplx{std::cos(th), std::sin(th)};
            const double m = N(t) * 0.5 * r * (r1 - r0) * (th1 - th0);
            if (m == 0.0) continue;
            if (dist_pair(t) < grade_reach)
              route(t, m);
            else
              ring_nodes.push_back({t, m});
          }
      };
  // Every cell carries a 2x2 Gauss rule (4th order) so the moving window's
  // fade stays resolved by whatever cells it overlaps; subdivision towards
  // the cone points keeps cell size proportional to the distance there.
  for (int a = 0; a < n_ann; ++a) {
    ann_offset[a] = ring_nodes.size();
    const double r0 = edges[a], r1 = edges[a + 1];
    const bool maybe_near =
        r0 < std::abs(pair.a2) + std::abs(pair.a3) + 2.0 * grade_reach;
    for (int j = 0; j < nth; ++j) {
      if (maybe_near) {
        emit(r0, r1, j * dth, (j + 1) * dth, 0);
      } else {
        for (int gi = 0; gi < 2; ++gi)
          for (int gj = 0; gj < 2; ++gj) {
            const double r = r0 + (r1 - r0) * g2x[gi];
            const double th = (j + g2x[gj]) * dth;
            const cplx t = r * cplx{std::cos(th), std::sin(th)};
            const double m = N(t) * 0.5 * r * (r1 - r0) * dth;
            if (m != 0.0) ring_nodes.push_back({t, m});
          }
      }
    }
  }
  ann_offset[n_ann] = ring_nodes.size();

  // Finalize buckets: geometric centre, radius, multipole moments.
  std::erase_if(buckets, [](const Bucket& b) { return b.nodes.empty(); });
  for (Bucket& b : buckets) {
    cplx c{};
    for (const MassNode& nd : b.nodes) c += nd.t;
    b.center = c / static_cast<double>(b.nodes.size());
    for (const MassNode& nd : b.nodes) {
      b.radius = std::max(b.radius, std::abs(nd.t - b.center));
      b.mass += nd.m;
      cplx p = nd.m;
      for (int k = 0; k < kMoments; ++k) {
        b.mom[k] += p;
        p *= nd.t - b.center;
      }
    }
  }

  // Moment prefix/suffix tables over annuli.
  prefix.assign(n_ann + 1, {});
  suffix.assign(n_ann + 1, {});
  suffix_log.assign(n_ann + 1, 0.0);
  suffix_0.assign(n_ann + 1, 0.0);
  for (int a = 0; a < n_ann; ++a) {
    prefix[a + 1] = prefix[a];
    for (std::size_t i = ann_offset[a]; i < ann_offset[a + 1]; ++i) {
      const MassNode& nd = ring_nodes[i];
      cplx p = nd.m;
      for (int k = 0; k < kMoments; ++k) {
        prefix[a + 1][k] += p;  // holds m * t^k
        p *= nd.t;
      }
    }
  }
  // Analytic tail beyond T_ext: centroid kills 1/t; the quadratic and cubic
  // angular harmonics pair only with matching kernel harmonics, the squared
  // quadratic term feeds the angular mean.
  const cplx M2 = (1.0 - b2) * pair.a2 * pair.a2 +
                  (1.0 - b3) * pair.a3 * pair.a3;
  const cplx M3 = (1.0 - b2) * pair.a2 * pair.a2 * pair.a2 +
                  (1.0 - b3) * pair.a3 * pair.a3 * pair.a3;
  const double Te = T_ext;
  const double p4 = std::pow(Te, 2.0 * gamma - 4.0);
  const double p6 = std::pow(Te, 2.0 * gamma - 6.0);
  const double d4 = 4.0 - 2.0 * gamma, d6 = 6.0 - 2.0 * gamma;
  const double tail0 = kPi * std::norm(M2) * p4 / d4;
  const double tail_log =
      kPi * std::norm(M2) * p4 * (std::log(Te) / d4 + 1.0 / (d4 * d4));
  const cplx tail_s2 = 2.0 * kPi * std::conj(M2) * p4 / d4;
  const cplx tail_s3 = (4.0 * kPi / 3.0) * std::conj(M3) * p6 / d6;
  suffix_0[n_ann] = tail0;
  suffix_log[n_ann] = tail_log;
  suffix[n_ann][1] = tail_s2;  // suffix[k] stores Int f t^{-k-1}
  suffix[n_ann][2] = tail_s3;
  for (int a = n_ann - 1; a >= 0; --a) {
    suffix_0[a] = suffix_0[a + 1];
    suffix_log[a] = suffix_log[a + 1];
    suffix[a] = suffix[a + 1];
    for (std::size_t i = ann_offset[a]; i < ann_offset[a + 1]; ++i) {
      const MassNode& nd = ring_nodes[i];
      suffix_0[a] += nd.m;
      suffix_log[a] += nd.m * std::log(std::abs(nd.t));
      cplx p = nd.m / nd.t;
      for (int k = 0; k < kMoments; ++k) {
        suffix[a][k] += p;
        p /= nd.t;
      }
    }
  }

  win_nth = std::max(96, spec.nodes_per_annulus * 3 / 2);
  win_nr = std::max(32, spec.patch_depth * 2 / 3);
  fallback_radius = 0.35 * scale;
}

FlatMetric::Impl::Kernels FlatMetric::Impl::convolve(cplx w, bool need_log,
                                                     bool need_grad) const {
  Kernels out;
  if (pair.degenerate) return out;
  const double aw = std::abs(w);
  if (aw > T_ext / 2.6)
    throw QuadratureError("evaluation radius exceeds quadrature coverage");

  // Ring cores.
  for (const auto& c : cores) {
    if (need_log) out.logv += c.log_potential(w);
    if (need_grad) out.grad += c.grad_potential(w);
  }

  // Annuli: explicit kernel sums on the band around |w|, moment expansions
  // inside and outside, smooth window treatment for the kernel singularity.
  // The handoff to the moving window fades over [dwin/2, 2.5 dwin]: the fade
  // must stay wide against the local cell size of the fixed annuli, while
  // the whole window keeps clear of the cone-point kinks.
  // Smooth-in-w combination of the radius caps (p-norm soft min / max).
  const double cap_r = 0.35 * std::pow(std::pow(scale, 8.0) +
                                           std::pow(aw, 8.0),
                                       0.125);
  const double cap_p =
      std::pow(std::pow(0.22 * dist_pair_smooth(w), 8.0) +
                   std::pow(6.0 * s_floor, 8.0),
               0.125);
  const double dwin = std::pow(
      1.0 / (1.0 / std::pow(cap_r, 8.0) + 1.0 / std::pow(cap_p, 8.0)),
      0.125);
  const double wfade_lo = 0.5 * dwin, wfade_hi = 2.5 * dwin;
  const int n_ann = static_cast<int>(edges.size()) - 1;
  const double lo = std::min(aw / 2.6, std::max(0.0, aw - 1.05 * wfade_hi));
  const double hi = std::max(2.6 * aw, aw + 1.05 * wfade_hi);
  int i_lo = 0, i_hi = 0;
  while (i_lo < n_ann && edges[i_lo + 1] <= lo) ++i_lo;
  i_hi = i_lo;
  while (i_hi < n_ann && edges[i_hi] < hi) ++i_hi;
  // Annuli buried inside the window's full-coverage disk contribute nothing
  // to the node sum; step over them wholesale.
  int i_start = i_lo;
  while (i_start < i_hi && aw + edges[i_start + 1] <= wfade_lo) ++i_start;

  if (need_log || need_grad) {
    for (std::size_t i = ann_offset[i_start]; i < ann_offset[i_hi]; ++i) {
      const MassNode& nd = ring_nodes[i];
      const cplx d = w - nd.t;
      const double dist = std::abs(d);
      if (dist <= wfade_lo) continue;  // covered by the moving window
      const double keep =
          dist >= wfade_hi ? 1.0
                           : 1.0 - fade_out(dist, wfade_lo, wfade_hi).v;
      if (keep == 0.0) continue;
      if (need_log) out.logv += nd.m * keep * std::log(dist);
      if (need_grad)
        out.grad += nd.m * keep * 0.5 * std::conj(d) / (dist * dist);
    }
  }

  // Shell/sector buckets around the cone points: multipole sums when the
  // bucket clears both the 2.6-type convergence margin and the window fade,
  // explicit nodes otherwise.
  for (const Bucket& b : buckets) {
    const cplx dc = w - b.center;
    const double D = std::abs(dc);
    if (D >= std::max(2.2 * b.radius, wfade_hi + 1.05 * b.radius)) {
      if (need_log) {
        double acc = b.mass * std::log(D);
        cplx invd = 1.0 / dc, pw = invd;
        for (int k = 1; k < kMoments; ++k) {
          acc -= (b.mom[k] * pw).real() / k;
          pw *= invd;
        }
        out.logv += acc;
      }
      if (need_grad) {
        cplx acc{};
        cplx invd = 1.0 / dc, pw = 0.5 * invd;
        for (int k = 0; k < kMoments; ++k) {
          acc += b.mom[k] * pw;
          pw *= invd;
        }
        out.grad += acc;
      }
    } else {
      for (const MassNode& nd : b.nodes) {
        const cplx d = w - nd.t;
        const double dist = std::abs(d);
        if (dist <= wfade_lo) continue;
        const double keep =
            dist >= wfade_hi ? 1.0
                             : 1.0 - fade_out(dist, wfade_lo, wfade_hi).v;
        if (keep == 0.0) continue;
        if (need_log) out.logv += nd.m * keep * std::log(dist);
        if (need_grad)
          out.grad += nd.m * keep * 0.5 * std::conj(d) / (dist * dist);
      }
    }
  }

  // Inner prefix: log|w-t| = log|w| - Re sum (t/w)^k / k.
  if (i_lo > 0 && aw > 0) {
    const auto& P = prefix[i_lo];
    if (need_log) {
      double acc = P[0].real() * std::log(aw);
      cplx invw = 1.0 / w, pw = invw;
      for (int k = 1; k < kMoments; ++k) {
        acc -= (P[k] * pw).real() / k;
        pw *= invw;
      }
      out.logv += acc;
    }
    if (need_grad) {
      // 1/(2(w-t)) = (1/2w) sum (t/w)^k.
      cplx acc{};
      cplx invw = 1.0 / w, pw = 0.5 * invw;
      for (int k = 0; k < kMoments; ++k) {
        acc += P[k] * pw;
        pw *= invw;
      }
      out.grad += acc;
    }
  }

  // Outer suffix: log|w-t| = log|t| - Re sum (w/t)^k / k.
  {
    const auto& S = suffix[i_hi];
    if (need_log) {
      double acc = suffix_log[i_hi];
      cplx pw = w;  // S[k] = Int f t^{-k-1}
      for (int k = 0; k < kMoments - 1; ++k) {
        acc -= (S[k] * pw).real() / (k + 1);
        pw *= w;
      }
      out.logv += acc;
    }
    if (need_grad) {
      cplx acc = -0.5 * suffix[i_hi][0];
      cplx pw = w;
      for (int k = 1; k < kMoments; ++k) {
        acc -= 0.5 * suffix[i_hi][k] * pw;
        pw *= w;
      }
      out.grad += acc;
    }
  }

  // Moving window around w with exact radial log moments per cell.
  const double dth = 2.0 * kPi / win_nth;
  const double dtau = wfade_hi / win_nr;
  auto prim = [](double t) {  // Int tau log tau dtau
    return t == 0.0 ? 0.0 : 0.25 * t * t * (2.0 * std::log(t) - 1.0);
  };
  double wlog = 0.0;
  cplx wgrad{};
  for (int j = 0; j < win_nth; ++j) {
    const double th = (j + 0.5) * dth;
    const cplx dir{std::cos(th), std::sin(th)};
    double col_log = 0.0, col_1 = 0.0;
    for (int i = 0; i < win_nr; ++i) {
      const double tau = (i + 0.5) * dtau;
      const cplx t = w + tau * dir;
      const double g = N(t) * fade_out(tau, wfade_lo, wfade_hi).v;
      if (g == 0.0) continue;
      if (need_log)
        col_log += g * (prim((i + 1) * dtau) - prim(i * dtau));
      if (need_grad) col_1 += g * dtau;
    }
    wlog += col_log;
    if (need_grad) wgrad -= col_1 * std::conj(dir);
  }
  // dmu = 2 tau dtau dtheta; the grad kernel is -conj(dir)/(2 tau).
  out.logv += 2.0 * dth * wlog;
  out.grad += dth * wgrad;
  return out;
}

double FlatMetric::Impl::potential(cplx w) const {
  const double base = std::pow(std::norm(w), gamma);
  if (pair.degenerate) return base;
  return base + gamma * gamma / kPi * convolve(w, true, false).logv;
}

cplx FlatMetric::Impl::gradient(cplx w) const {
  // At w = 0 the cone-term gradient and the origin ring core cancel exactly.
  const cplx base =
      w == cplx{} ? cplx{}
                  : gamma * std::pow(std::norm(w), gamma - 1.0) * std::conj(w);
  if (pair.degenerate) return base;
  return base + gamma * gamma / kPi * convolve(w, false, true).grad;
}

void FlatMetric::Impl::both(cplx w, double& phi, cplx& dphi) const {
  phi = std::pow(std::norm(w), gamma);
  dphi = w == cplx{}
             ? cplx{}
             : gamma * std::pow(std::norm(w), gamma - 1.0) * std::conj(w);
  if (pair.degenerate) return;
  const Kernels k = convolve(w, true, true);
  phi += gamma * gamma / kPi * k.logv;
  dphi += gamma * gamma / kPi * k.grad;
}

double FlatMetric::Impl::A_value() const {
  if (pair.degenerate) return 0.0;
  std::lock_guard<std::mutex> lk(a_mutex);
  if (!A_ready) {
    double total = suffix_0[0];
    for (const auto& c : cores) total += c.total_mass();
    for (const auto& b : buckets) total += b.mass;
    A_cached = gamma * gamma / kPi * total;
    A_ready = true;
  }
  return A_cached;
}

void FlatMetric::Impl::build_tables() const {
  // phi and dphi on an inner polar grid, phi0 and dphi0 on an outer
  // log-radial grid. Built once, then shared by every fast_eval call.
  const int inr = 192, inth = 144;
  inner_phi.r0 = 0.0;
  inner_phi.r1 = xi0 * 1.02;
  inner_phi.nr = inr;
  inner_phi.nth = inth;
  inner_phi.mirror_center = true;
  inner_phi.v.resize(static_cast<std::size_t>(inr + 1) * inth);
  inner_dre = inner_phi;
  inner_dim = inner_phi;
  const double hr = inner_phi.r1 / inr, hth = 2.0 * kPi / inth;
  parallel_for(
      static_cast<std::size_t>(inr + 1),
      [&](std::size_t i) {
        for (int j = 0; j < inth; ++j) {
          const cplx xi = (i * hr) * cplx{std::cos(j * hth),
                                          std::sin(j * hth)};
          double phi;
          cplx dphi;
          both(xi, phi, dphi);
          const std::size_t idx = i * inth + j;
          inner_phi.v[idx] = phi;
          inner_dre.v[idx] = dphi.real();
          inner_dim.v[idx] = dphi.imag();
        }
      },
      default_workers());

  const int onr = 200, onth = 96;
  outer_p0.r0 = std::log(xi0 * 0.9);
  outer_p0.r1 = std::log(xi_max);
  outer_p0.nr = onr;
  outer_p0.nth = onth;
  outer_p0.v.resize(static_cast<std::size_t>(onr + 1) * onth);
  outer_dre = outer_p0;
  outer_dim = outer_p0;
  const double hx = (outer_p0.r1 - outer_p0.r0) / onr,
               hth2 = 2.0 * kPi / onth;
  const double A = A_value();
  parallel_for(
      static_cast<std::size_t>(onr + 1),
      [&](std::size_t i) {
        const double r = std::exp(outer_p0.r0 + i * hx);
        for (int j = 0; j < onth; ++j) {
          const cplx xi = r * cplx{std::cos(j * hth2), std::sin(j * hth2)};
          double phi;
          cplx dphi;
          both(xi, phi, dphi);
          const double r2g = std::pow(std::norm(xi), gamma);
          const cplx dcone =
              gamma * std::pow(std::norm(xi), gamma - 1.0) * std::conj(xi);
          const std::size_t idx = i * onth + j;
          outer_p0.v[idx] = phi - r2g - A * std::log(r);
          const cplx d0 = dphi - dcone - A / (2.0 * xi);
          outer_dre.v[idx] = d0.real();
          outer_dim.v[idx] = d0.imag();
        }
      },
      default_workers());
}

// ---------------------------------------------------------------------------

FlatMetric::FlatMetric(ConePair pair, QuadratureSpec spec)
    : impl_(std::make_unique<Impl>()) {
  impl_->pair = pair;
  impl_->spec = spec;
  impl_->build();
}

FlatMetric::~FlatMetric() = default;
FlatMetric::FlatMetric(FlatMetric&&) noexcept = default;
FlatMetric& FlatMetric::operator=(FlatMetric&&) noexcept = default;

const ConePair& FlatMetric::pair() const { return impl_->pair; }
const QuadratureSpec& FlatMetric::spec() const { return impl_->spec; }

double FlatMetric::density(cplx w) const {
  const ConePair& p = impl_->pair;
  const double g = p.gamma;
  if (p.degenerate) {
    if (w == cplx{}) throw SingularPointError("density at the collapsed cone point");
    return g * g * std::pow(std::norm(w), g - 1.0);
  }
  if (w == p.a2 || w == p.a3)
    throw SingularPointError("density at a cone point");
  return g * g * std::pow(std::norm(w - p.a2), p.beta2 - 1.0) *
         std::pow(std::norm(w - p.a3), p.beta3 - 1.0);
}

double FlatMetric::potential(cplx w) const { return impl_->potential(w); }

cplx FlatMetric::potential_gradient(cplx w) const {
  const ConePair& p = impl_->pair;
  if (!p.degenerate && (w == p.a2 || w == p.a3))
    throw SingularPointError("gradient at a cone point");
  if (p.degenerate && w == cplx{})
    throw SingularPointError("gradient at the collapsed cone point");
  return impl_->gradient(w);
}

double FlatMetric::phi0(cplx w) const {
  return potential(w) - std::pow(std::norm(w), impl_->gamma) -
         asymptotic_constant() * std::log(std::abs(w));
}

double FlatMetric::asymptotic_constant() const { return impl_->A_value(); }

AsymptoticData FlatMetric::asymptotic() const {
  AsymptoticData out;
  out.c = std::min(2.0 - 2.0 * impl_->gamma, 1.0);
  if (impl_->pair.degenerate) return out;
  const double a1 = asymptotic_constant();
  FlatMetric finer(impl_->pair, impl_->spec.scaled(std::sqrt(2.0)));
  const double a2 = finer.asymptotic_constant();
  out.A = a2;
  out.quadrature_error = std::abs(a1 - a2) / std::max(1.0, std::abs(a2));
  if (out.quadrature_error > impl_->spec.agreement_target)
    throw QuadratureError("two-resolution disagreement on A: " +
                          format_double(out.quadrature_error));
  return out;
}

PhiEval FlatMetric::fast_eval(cplx xi) const {
  PhiEval out;
  const Impl& im = *impl_;
  const double r = std::abs(xi);
  if (im.pair.degenerate) {
    out.phi = std::pow(std::norm(xi), im.gamma);
    out.dphi = im.gamma * std::pow(std::norm(xi), im.gamma - 1.0) *
               std::conj(xi);
    out.asymptotic = true;
    return out;
  }
  std::call_once(im.tables_once, [&] { im.build_tables(); });
  if (r >= im.xi0) {
    out.asymptotic = true;
    const double A = im.A_value();
    if (r >= im.xi_max * 0.98) {
      out.phi0 = 0.0;
      out.dphi0 = {};
    } else {
      const double x = std::log(r), th = std::arg(xi);
      const double tt = th < 0 ? th + 2.0 * kPi : th;
      out.phi0 = im.outer_p0.at(x, tt);
      out.dphi0 = {im.outer_dre.at(x, tt), im.outer_dim.at(x, tt)};
    }
    out.phi = std::pow(std::norm(xi), im.gamma) + A * std::log(r) + out.phi0;
    out.dphi = im.gamma * std::pow(std::norm(xi), im.gamma - 1.0) *
                   std::conj(xi) +
               A / (2.0 * xi) + out.dphi0;
    return out;
  }
  const double d2 = std::abs(xi - im.pair.a2), d3 = std::abs(xi - im.pair.a3);
  if (d2 < im.fallback_radius || d3 < im.fallback_radius) {
    im.both(xi, out.phi, out.dphi);
    return out;
  }
  const double th = std::arg(xi);
  const double tt = th < 0 ? th + 2.0 * kPi : th;
  out.phi = im.inner_phi.at(r, tt);
  out.dphi = {im.inner_dre.at(r, tt), im.inner_dim.at(r, tt)};
  return out;
}

LocalExpansion FlatMetric::local_expansion(int j) const {
  const Impl& im = *impl_;
  if (im.pair.degenerate)
    throw DegenerateError("no local expansion for the collapsed pair");
  if (j != 2 && j != 3) throw DomainError("cone point index must be 2 or 3");
  const cplx a = j == 2 ? im.pair.a2 : im.pair.a3;
  const double beta = j == 2 ? im.pair.beta2 : im.pair.beta3;
  const double rho = im.cores[j == 2 ? 0 : 1].rho;

  constexpr int kRings = 7, kAngles = 8;
  const int rows = kRings * kAngles;
  Eigen::MatrixXd M(rows, 6);
  Eigen::VectorXd rhs(rows);
  std::vector<std::array<double, 3>> raw;
  raw.reserve(rows);
  int rix = 0;
  for (int k = 0; k < kRings; ++k) {
    const double d = 0.4 * rho * std::pow(0.5, k);
    for (int q = 0; q < kAngles; ++q) {
      const double th = 2.0 * kPi * (q + 0.37) / kAngles;
      const cplx w = a + d * cplx{std::cos(th), std::sin(th)};
      const double val = potential(w);
      const double x = d * std::cos(th), y = d * std::sin(th);
      M(rix, 0) = 1.0;
      M(rix, 1) = x;
      M(rix, 2) = y;
      M(rix, 3) = x * x - y * y;
      M(rix, 4) = x * y;
      M(rix, 5) = std::pow(d, 2.0 * beta);
      rhs(rix) = val;
      raw.push_back({d, th, val});
      ++rix;
    }
  }
  Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
  LocalExpansion out;
  out.cone_point = a;
  out.leading = sol(5);
  for (int i = 0; i < rows; ++i) {
    const double smooth = sol(0) + sol(1) * M(i, 1) + sol(2) * M(i, 2) +
                          sol(3) * M(i, 3) + sol(4) * M(i, 4);
    out.remainder.push_back({raw[i][0], raw[i][1], rhs(i) - smooth});
  }
  return out;
}

double FlatMetric::f_integral_within(double R) const {
  const Impl& im = *impl_;
  if (im.pair.degenerate) return 0.0;
  double total = 0.0;
  for (const auto& c : im.cores) {
    if (c.center == cplx{}) {
      double q, ql;
      c.at(std::min(R, c.rho), q, ql);
      total += q;
    } else if (std::abs(c.center) + c.rho <= R) {
      total += c.total_mass();
    }
  }
  const int n_ann = static_cast<int>(im.edges.size()) - 1;
  for (int a = 0; a < n_ann && im.edges[a + 1] <= R; ++a)
    for (std::size_t i = im.ann_offset[a]; i < im.ann_offset[a + 1]; ++i)
      total += im.ring_nodes[i].m;
  for (const auto& b : im.buckets)
    for (const MassNode& nd : b.nodes)
      if (std::abs(nd.t) <= R) total += nd.m;
  return total;
}

double FlatMetric::largest_cone_radius() const {
  return std::max(std::abs(impl_->pair.a2), std::abs(impl_->pair.a3));
}

double FlatMetric::eval_radius_limit() const {
  return impl_->pair.degenerate ? std::numeric_limits<double>::infinity()
                                : impl_->T_ext / 2.6;
}

// ---------------------------------------------------------------------------

SchwarzChristoffel::SchwarzChristoffel(ConePair pair) : pair_(pair) {
  if (pair.degenerate)
    throw DegenerateError("Schwarz-Christoffel needs distinct cone points");
  if (pair.a2.imag() != 0.0 || pair.a3.imag() != 0.0 ||
      !(pair.a2.real() > pair.a3.real()))
    throw DomainError("Schwarz-Christoffel requires real a2 > a3");
}

namespace {

cplx branch_factor(cplx t, cplx a, double beta) {
  const cplx d = t - a;
  double ang = std::atan2(d.imag(), d.real());
  if (ang < -0.5 * kPi) ang += 2.0 * kPi;  // cut along the downward vertical
  const double m = 0.5 * std::log(std::norm(d));
  return std::exp(cplx{(beta - 1.0) * m, (beta - 1.0) * ang});
}

}  // namespace

cplx SchwarzChristoffel::derivative(cplx w) const {
  return branch_factor(w, pair_.a2, pair_.beta2) *
         branch_factor(w, pair_.a3, pair_.beta3);
}

cplx SchwarzChristoffel::integrate_segment(cplx p, cplx q) const {
  if (p == q) return {};
  const double tol = 1e-12 * std::max({1.0, std::abs(p), std::abs(q)});
  auto near_pt = [&](cplx x, cplx a) { return std::abs(x - a) <= tol; };
  const cplx dir = q - p;
  // Interior pass through a cone point is rejected; endpoint contact uses a
  // power substitution that absorbs the integrable singularity.
  for (cplx a : {pair_.a2, pair_.a3}) {
    if (near_pt(p, a) || near_pt(q, a)) continue;
    const double t =
        std::clamp((((a - p) / dir)).real(), 0.0, 1.0);
    if (std::abs(p + t * dir - a) <= tol)
      throw SingularPointError("integration path passes through a cone point");
  }

  auto smooth_quad = [&](cplx p0, cplx q0) {
    cplx acc{};
    constexpr int kPanels = 12;
    for (int s = 0; s < kPanels; ++s) {
      const double u0 = static_cast<double>(s) / kPanels;
      const double u1 = static_cast<double>(s + 1) / kPanels;
      for (int g = 0; g < 8; ++g) {
        const double u = u0 + (u1 - u0) * kG8x[g];
        acc += kG8w[g] * (u1 - u0) * derivative(p0 + u * (q0 - p0));
      }
    }
    return acc * (q0 - p0);
  };

  auto endpoint_quad = [&](cplx a, cplx other, double beta,
                           double beta_other, cplx a_other) {
    // Integral from the cone point a towards `other` of
    // (t-a)^{b-1} (t-a_other)^{b_other-1} dt. Along the segment t = a + s e,
    // (t-a)^{b-1} = s^{b-1} phase, and u = s^b flattens the endpoint.
    const cplx e = (other - a) / std::abs(other - a);
    const double L = std::abs(other - a);
    const cplx phase = branch_factor(a + e, a, beta);
    cplx acc{};
    const double Umax = std::pow(L, beta);
    constexpr int kPanels = 16;
    for (int s = 0; s < kPanels; ++s) {
      const double u0 = Umax * s / kPanels, u1 = Umax * (s + 1) / kPanels;
      for (int g = 0; g < 8; ++g) {
        const double u = u0 + (u1 - u0) * kG8x[g];
        const double sv = std::pow(u, 1.0 / beta);
        const cplx t = a + sv * e;
        acc += kG8w[g] * (u1 - u0) / beta * phase *
               branch_factor(t, a_other, beta_other);
      }
    }
    return acc * e;
  };

  if (near_pt(p, pair_.a2) || near_pt(p, pair_.a3)) {
    const bool is2 = near_pt(p, pair_.a2);
    const cplx a = is2 ? pair_.a2 : pair_.a3;
    const cplx ao = is2 ? pair_.a3 : pair_.a2;
    const double b = is2 ? pair_.beta2 : pair_.beta3;
    const double bo = is2 ? pair_.beta3 : pair_.beta2;
    if (near_pt(q, pair_.a2) || near_pt(q, pair_.a3)) {
      const cplx mid = 0.5 * (p + q);
      return integrate_segment(p, mid) + integrate_segment(mid, q);
    }
    return endpoint_quad(a, q, b, bo, ao);
  }
  if (near_pt(q, pair_.a2) || near_pt(q, pair_.a3)) {
    const bool is2 = near_pt(q, pair_.a2);
    const cplx a = is2 ? pair_.a2 : pair_.a3;
    const cplx ao = is2 ? pair_.a3 : pair_.a2;
    const double b = is2 ? pair_.beta2 : pair_.beta3;
    const double bo = is2 ? pair_.beta3 : pair_.beta2;
    return -endpoint_quad(a, p, b, bo, ao);
  }
  return smooth_quad(p, q);
}

cplx SchwarzChristoffel::map(cplx w) const {
  // Straight path from 0, split where it would cross a cone point.
  const cplx start{};
  std::vector<cplx> pts{start};
  for (cplx a : {pair_.a3, pair_.a2}) {
    if (std::abs(w - a) < 1e-12 || std::abs(a) < 1e-12) continue;
    const cplx dir = w - start;
    const double t = (((a - start) / dir)).real();
    if (t > 1e-12 && t < 1.0 - 1e-12 &&
        std::abs(start + t * dir - a) < 1e-12 * std::max(1.0, std::abs(w))) {
      pts.push_back(a);  // split exactly at the cone point (endpoint rule)
    }
  }
  std::sort(pts.begin() + 1, pts.end(),
            [&](cplx x, cplx y) { return std::abs(x) < std::abs(y); });
  pts.push_back(w);
  cplx acc{};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    acc += integrate_segment(pts[i], pts[i + 1]);
  return acc;
}

cplx SchwarzChristoffel::map_along(const std::vector<cplx>& path) const {
  if (path.size() < 2) throw DomainError("path needs at least two vertices");
  cplx acc = map(path.front());
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    acc += integrate_segment(path[i], path[i + 1]);
  return acc;
}

double SchwarzChristoffel::corner_angle(int j, double eps) const {
  if (j != 2 && j != 3) throw DomainError("cone point index must be 2 or 3");
  const cplx a = j == 2 ? pair_.a2 : pair_.a3;
  const cplx fa = map(a);
  // Both probe segments start at the cone point; the substitution rule keeps
  // them accurate.
  const cplx f_in = fa + integrate_segment(a, a - eps);   // towards the pair
  const cplx f_out = fa + integrate_segment(a, a + eps);  // away along axis
  const cplx r = (f_in - fa) / (f_out - fa);
  return std::abs(std::arg(r));
}

// ---------------------------------------------------------------------------

std::shared_ptr<const FlatMetric> shared_flat_metric(
    const ConePair& pair, const QuadratureSpec& spec) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const FlatMetric>> registry;
  std::string key;
  for (double v :
       {pair.beta2, pair.beta3, pair.a2.real(), pair.a2.imag(),
        pair.a3.real(), pair.a3.imag(), static_cast<double>(spec.annuli),
        static_cast<double>(spec.nodes_per_annulus), spec.truncation_radius,
        static_cast<double>(spec.patch_depth)})
    key += format_double(v) + ";";
  std::lock_guard<std::mutex> lk(mu);
  auto it = registry.find(key);
  if (it != registry.end()) return it->second;
  auto fm = std::make_shared<const FlatMetric>(pair, spec);
  registry.emplace(key, fm);
  return fm;
}

double flat_distance(const ConePair& pair, cplx p, cplx q,
                     const FlatGridSpec& grid) {
  const double g = pair.gamma;
  auto density = [pair, g](cplx w) {
    double n2 = std::norm(w - pair.a2), n3 = std::norm(w - pair.a3);
    n2 = std::max(n2, 1e-280);
    n3 = std::max(n3, 1e-280);
    return g * g * std::pow(n2, pair.beta2 - 1.0) *
           std::pow(n3, pair.beta3 - 1.0);
  };
  const double reach = std::max({std::abs(p), std::abs(q),
                                 std::abs(pair.a2), std::abs(pair.a3)});
  if (reach > grid.half_width)
    throw GridError("grid box does not contain the query points");
  GridGeodesic2D graph(cplx{}, grid.half_width, grid.n, grid.connectivity,
                       density, default_workers());
  const double snap = 0.45 * graph.spacing();
  return graph.distance(p, q, snap);
}

}  // namespace ccy
