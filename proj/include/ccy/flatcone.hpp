#pragma once

#include <memory>
#include <vector>

#include "ccy/errors.hpp"
#include "ccy/util.hpp"

namespace ccy {

// Two cone points on the slice plane, with the weighted centre of mass at
// zero: (1-beta2) a2 + (1-beta3) a3 = 0. gamma = beta2 + beta3 - 1 is the
// collapsed angle seen from infinity.
struct ConePair {
  double beta2 = 0.9, beta3 = 0.9;
  cplx a2{1.0, 0.0}, a3{-1.0, 0.0};
  double gamma = 0.8;
  bool degenerate = false;  // explicit a2 = a3 = 0 collision limit

  // Checked constructor; throws DomainError on bad angles or off-centre mass.
  static ConePair make(double beta2, double beta3, cplx a2, cplx a3);
  // a2 = scale on the positive real axis, a3 determined by the centroid.
  static ConePair centered(double beta2, double beta3, double scale = 1.0);
  // Both cone points collapsed at the origin; the metric is the gamma-cone.
  static ConePair collapsed(double beta2, double beta3);
  // The pair (mu a2, mu a3); used by collision scans.
  ConePair rescaled(cplx mu) const;
};

// Node layout for the convolution quadrature: polar annuli centred at 0 up
// to the truncation radius, singular sub-patches at the cone points and the
// origin, analytic tail beyond truncation.
struct QuadratureSpec {
  int annuli = 640;             // log-spaced annuli between r_inner and T
  int nodes_per_annulus = 64;   // uniform angular nodes
  double truncation_radius = 0.0;  // T; 0 selects max(40, 10 max(|a_j|, 1))
  int patch_depth = 48;         // radial cells per singular patch
  double agreement_target = 1e-4;  // two-resolution relative target on A

  QuadratureSpec scaled(double f) const;
  static QuadratureSpec fast();  // cheaper profile for unit tests
};

struct AsymptoticData {
  double A = 0.0;                // log coefficient in phi = |w|^{2g} + A log|w| + phi0
  double c = 0.0;                // decay exponent of phi0, min{2-2gamma, 1}
  double quadrature_error = 0.0; // two-resolution relative disagreement on A
};

// Leading behaviour of phi at a cone point: phi = L |w-a|^{2 beta} + S2 with
// S2 smooth harmonic; `remainder` samples S2-corrected values on shrinking
// rings for inspection.
struct LocalExpansion {
  cplx cone_point;
  double leading = 0.0;  // e^{S1(a)} > 0
  struct Sample {
    double radius, theta, value;
  };
  std::vector<Sample> remainder;
};

struct PhiEval {
  double phi = 0.0;
  cplx dphi{};     // d phi / d xi
  bool asymptotic = false;  // true when the |xi| >> 1 split was used
  double phi0 = 0.0;        // valid when asymptotic
  cplx dphi0{};             // valid when asymptotic
};

// Flat metric with two cone points on C and its potential
//   phi(w) = |w|^{2 gamma} + (gamma^2 / pi) Int f(t) log|w - t| dmu(t),
//   f(t) = |t-a2|^{2b2-2} |t-a3|^{2b3-2} - |t|^{2g-2},  dmu = i dt dtbar.
// A single instance owns a fixed node set; evaluations are deterministic
// and safe to call concurrently.
class FlatMetric {
 public:
  FlatMetric(ConePair pair, QuadratureSpec spec = {});
  ~FlatMetric();
  FlatMetric(FlatMetric&&) noexcept;
  FlatMetric& operator=(FlatMetric&&) noexcept;

  const ConePair& pair() const;
  const QuadratureSpec& spec() const;

  // gamma^2 |w-a2|^{2b2-2} |w-a3|^{2b3-2}; throws SingularPointError at a
  // cone point.
  double density(cplx w) const;

  // phi(w); extends continuously over the cone points.
  double potential(cplx w) const;

  // d phi / d w; throws SingularPointError at the cone points.
  cplx potential_gradient(cplx w) const;

  // phi - |w|^{2 gamma} - A log |w|.
  double phi0(cplx w) const;

  // A with a two-resolution agreement check; throws QuadratureError when the
  // two node sets disagree beyond spec.agreement_target.
  AsymptoticData asymptotic() const;
  // A from this node set only.
  double asymptotic_constant() const;

  // Cached-table evaluation used on hot paths (metric assembly). Falls back
  // to direct quadrature near the cone points. Builds tables on first use.
  PhiEval fast_eval(cplx xi) const;

  // Fit of the local expansion at cone point j (2 or 3).
  LocalExpansion local_expansion(int j) const;

  double largest_cone_radius() const;  // max |a_j|
  double eval_radius_limit() const;    // largest |w| the node set supports

  // Int f dmu over |t| < R (annuli cut at cell boundaries); diagnostic.
  double f_integral_within(double R) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Schwarz-Christoffel map of the upper half plane onto the truncated wedge,
//   F(w) = Int_0^w (t-a2)^{b2-1} (t-a3)^{b3-1} dt,
// for real a3 < a2. Branch: principal on each factor with the cut along the
// downward vertical from each cone point.
class SchwarzChristoffel {
 public:
  explicit SchwarzChristoffel(ConePair pair);

  cplx derivative(cplx w) const;  // the branch-resolved integrand
  // Integral along the straight segment 0 -> w (split at real-axis cone
  // points; endpoints at cone points are allowed).
  cplx map(cplx w) const;
  // Integral along a user polyline from path.front() with F(path.front())
  // taken as map(path.front()); throws SingularPointError when an interior
  // segment passes through a cone point.
  cplx map_along(const std::vector<cplx>& path) const;
  // Interior angle of the image wedge at F(a_j), measured from boundary
  // tangents at parameter distance eps.
  double corner_angle(int j, double eps = 1e-6) const;

  const ConePair& pair() const { return pair_; }

 private:
  cplx integrate_segment(cplx p, cplx q) const;
  ConePair pair_;
};

// Process-wide cache of FlatMetric instances keyed by pair and spec. The
// table builds are expensive; ansatz evaluators share instances through
// this registry (single-writer insertion, read-mostly afterwards).
std::shared_ptr<const FlatMetric> shared_flat_metric(const ConePair& pair,
                                                     const QuadratureSpec& spec);

// Shortest-path distance between p and q for the flat two-cone-point metric,
// on a lattice graph over a square box of the given half-width. p and q must
// lie within half a cell of lattice nodes, otherwise GridError.
struct FlatGridSpec {
  double half_width = 2.0;
  int n = 160;              // cells per axis
  int connectivity = 8;     // 8 or 16 neighbour offsets
};

double flat_distance(const ConePair& pair, cplx p, cplx q,
                     const FlatGridSpec& grid = {});

}  // namespace ccy
