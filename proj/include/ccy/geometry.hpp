#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ccy/ansatz.hpp"
#include "ccy/ricci.hpp"

namespace ccy {

// The six comparison cones. Factor angle 1.0 marks a Euclidean factor.
enum class ModelConeTag {
  Euclidean,      // C^2
  Beta1Gamma,     // C_{b1} x C_g
  Beta1Flat,      // C_{b1} x C
  Beta2Flat,      // C_{b2} x C
  Beta3Flat,      // C_{b3} x C
  GammaFlat,      // C_g x C
};

struct ModelCone {
  ModelConeTag tag;
  double beta_z = 1.0;  // first-factor angle
  double beta_w = 1.0;  // second-factor angle

  static ModelCone from(const AnsatzParams& p, ModelConeTag tag);
  static std::array<ModelCone, 6> catalog(const AnsatzParams& p);
  std::string name() const;
};

// D_lambda(z, w) = (lambda^{1/b1} z, lambda^{1/g} w); rho(D_lambda x) =
// lambda rho(x) exactly.
struct Dilation {
  double lambda = 1.0;
  double beta1, gamma;

  static Dilation of(const AnsatzParams& p, double lambda) {
    return {lambda, p.beta1, p.gamma};
  }
  void apply(cplx& z, cplx& w) const {
    z *= std::pow(lambda, 1.0 / beta1);
    w *= std::pow(lambda, 1.0 / gamma);
  }
};

// Distance on a 2D cone factor with rho = |z|^beta; product distance is the
// Euclidean combination of the factors.
double cone_factor_distance(double beta, cplx z1, cplx z2);
double cone_distance(const ModelCone& c, cplx z1, cplx w1, cplx z2, cplx w2);

// sup over sampled pairs of |d_{omega_{F,mu}} - d_{C_gamma}| on the box K,
// both distances on one shared lattice so the lattice overhead cancels.
struct DistortionSpec {
  double half_width = 1.5;
  int cells = 96;
  int sources = 6;
  int workers = 1;
};
double collision_distortion(const ConePair& pair, cplx mu,
                            const DistortionSpec& spec = {});

// Tangent-cone scan: graph distances of omega_lambda on the unit rho-ball
// against the product cone and the rescaled Hermitian comparison metric.
struct TangentConeSpec {
  int cells_per_axis = 14;
  int sources = 5;
  double line_margin = 0.15;  // keep sources away from the conical lines
  int workers = 1;
  unsigned long long seed = 7;
};
struct TangentConeReport {
  std::vector<double> lambdas;
  std::vector<double> distortion_cone;  // sup |d_lambda - d_cone|
  std::vector<double> distortion_herm;  // sup |d_lambda - d_{H,lambda}|
  std::vector<double> herm_vs_cone;     // sup |d_{H,lambda} - d_cone|
  DecayFit fit_herm_stage;              // slope of distortion_herm vs lambda
  DecayFit fit_cone_stage;              // slope of herm_vs_cone vs lambda
};
TangentConeReport tangent_cone_check(const AnsatzParams& p,
                                     const std::vector<double>& lambdas,
                                     const TangentConeSpec& spec = {});

// Ball classification at scale lambda^k per the model-cone region logic.
struct BallScaleReport {
  cplx z, w;
  int k = 0;
  std::optional<ModelConeTag> verdict;  // nullopt = Bad scale
  double epsilon = 0.0;
};
BallScaleReport classify_ball(const AnsatzParams& p, cplx z, cplx w, int k,
                              double lambda, double epsilon);

// Count of Bad scales over k = 0..k_max.
int bad_scale_count(const AnsatzParams& p, cplx z, cplx w, int k_max,
                    double lambda, double epsilon);

// Quasi-isometry chart Phi~(u, v) = (|u|^{1/b1 - 1} u, Phi_z(v)): maps
// Euclidean R^4 coordinates onto the singular space, fixing the cone lines.
struct ChartParams {
  double Lambda = 0.0;    // outer radius; 0 selects 3 max(|a_j|, 1)
  double mu_chart = 0.0;  // cone-point patch radius; 0 selects a default
  int profile = 0;        // cutoff profile id (quintic)
};
void quasi_isometry_chart(const AnsatzParams& p, const ChartParams& c, cplx u,
                          cplx v, cplx& z, cplx& w);

}  // namespace ccy
