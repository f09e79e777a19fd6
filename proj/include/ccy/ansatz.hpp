#pragma once

#include <functional>
#include <memory>

#include "ccy/angles.hpp"
#include "ccy/flatcone.hpp"
#include "ccy/hermitian.hpp"

namespace ccy {

// Cutoff pair (chi1, chi2) with chi1 + chi2 == 1, chi1 = 1 for s > 2 and
// chi2 = 1 for s < 1; quintic transition with two continuous derivatives.
struct CutoffPair {
  double chi1, chi2;
  double d1, d2;  // derivatives of chi1; chi2's are the negatives
};

CutoffPair cutoff(double s);

// Scale data at a point: r and R measure the distance to {z=0} and {w=0} in
// the product-cone geometry, rho the distance to the origin, s the gluing
// coordinate R r^{-alpha0}, xi the slice coordinate w/z.
struct PointFrame {
  double r = 0, R = 0, rho = 0, s = 0;
  cplx xi{};
  bool xi_valid = false;
};

// Parameters of the glued approximate metric. The d = 3 path is the one
// built here; the slice data is the two-cone-point flat metric.
struct AnsatzParams {
  AngleConfig config;
  ConePair pair;
  double alpha0 = 1.5;
  double kappa = 0;          // alpha0 beta1 / gamma
  double ball_radius = 0.3;  // working ball in rho
  QuadratureSpec quad;
  std::shared_ptr<const FlatMetric> flat;

  double beta1 = 0, beta2 = 0, beta3 = 0, gamma = 0;
  double A = 0;  // log coefficient of the slice potential

  static AnsatzParams make(const AngleConfig& config, double alpha0,
                           QuadratureSpec quad = QuadratureSpec::fast(),
                           double pair_scale = 1.0);
  static AnsatzParams make_with_pair(const AngleConfig& config, double alpha0,
                                     const ConePair& pair,
                                     QuadratureSpec quad);
  // Rescales the cone points to the gauge |a2|^{2-2b2} |a3|^{2-2b3} = 1.
  AnsatzParams renormalized() const;

  PointFrame frame(cplx z, cplx w) const;
};

// Potential psi = |z|^{2b1} + chi1 |w|^{2g} + chi2 |z|^{2g} phi(w/z);
// continuous over the lines and the origin.
double potential_psi(const AnsatzParams& p, cplx z, cplx w);

// The glued metric i ddbar psi in the (dz, dw) coframe. Throws
// SingularPointError on the three lines.
HermitianForm2 metric(const AnsatzParams& p, cplx z, cplx w);

// The product-cone reference diag(b1^2 |z|^{2b1-2}, g^2 |w|^{2g-2}).
HermitianForm2 product_cone_metric(const AnsatzParams& p, cplx z, cplx w);

// E with metric = product cone + E, assembled from small pieces so that the
// deviation stays relatively accurate even where it is tiny.
HermitianForm2 metric_deviation(const AnsatzParams& p, cplx z, cplx w);

// Hermitian comparison metric
//   diag(b1^2 |z|^{2b1-2}, g^2 |w-a2 z|^{2b2-2} |w-a3 z|^{2b3-2}).
HermitianForm2 hermitian_model(const AnsatzParams& p, cplx z, cplx w);

// Transverse cone-angle probe. line: 1, 2, 3 select L1, L2, L3; 0 selects
// the smooth axis {w=0}. Returns circumference / metric radius at metric
// radius s; the expected limit is 2 pi beta_line (2 pi for the axis).
double cone_angle_probe(const AnsatzParams& p, int line, cplx base_coord,
                        double s);

// Generic probe for an arbitrary metric field: circle of metric radius s in
// the complex direction `normal` around `base`.
using MetricField = std::function<HermitianForm2(cplx, cplx)>;
double probe_transverse(const MetricField& g, cplx base_z, cplx base_w,
                        cplx normal_z, cplx normal_w, double s);

// Holomorphic coordinate change (u, v) -> (z, w) = (u^m, v^n) followed by
// the shear (Z, W) = (w, z - c w) that moves the cusp cover's lines into
// the canonical arrangement. m = n = 1, c = 0 is the identity.
struct PowerPullback {
  int m = 1, n = 1;
  double shear = 0.0;
};

HermitianForm2 cusp_pullback(const AnsatzParams& p, const PowerPullback& pb,
                             cplx u, cplx v);

// Ansatz parameters plus the covering map for a cuspidal curve {u^m = v^n}.
struct CuspAnsatz {
  CuspConfig cusp;
  AnsatzParams params;
  PowerPullback cover;
};

CuspAnsatz make_cusp_ansatz(const CuspConfig& cusp,
                            QuadratureSpec quad = QuadratureSpec::fast());

}  // namespace ccy
