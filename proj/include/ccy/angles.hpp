#pragma once

#include <optional>
#include <vector>

#include "ccy/util.hpp"

namespace ccy {

// A vector of cone-angle factors beta_j in (0,1), stored sorted ascending,
// together with the collapsed angle gamma of the lines j >= 2:
//   1 - gamma = sum_{j>=2} (1 - beta_j).
// strict_instability records whether sum_{j>=2}(1-beta_j) < 1 - beta_1 holds
// strictly, which is equivalent to gamma > beta_1.
struct AngleConfig {
  std::vector<double> betas;       // sorted ascending
  std::vector<int> permutation;    // betas[i] == input[permutation[i]]
  double gamma = 0.0;
  bool strict_instability = false;
  bool gamma_in_range = false;     // 0 < gamma < 1

  int d() const { return static_cast<int>(betas.size()); }
  double beta1() const { return betas.front(); }
};

// Weights mu_j = 1 - beta_j. Bijective with AngleConfig.
struct Weights {
  std::vector<double> mus;

  double sum() const;
  static Weights from_config(const AngleConfig& c);
  AngleConfig to_config() const;
};

enum class StabilityTag { Stable, Semistable, Unstable, NotKLT };

struct StabilityClass {
  StabilityTag tag;
  // Index (into the weight vector) of the dominating weight when Unstable.
  std::optional<int> unstable_index;
};

// Parameters of a cuspidal curve {u^m = v^n} with cone angle 2*pi*beta in the
// range 1 + 1/n - 1/m < beta < 1, and the collapsed angle gamma_tilde of its
// tangent cone, 1 - gamma_tilde = m (1 - beta).
struct CuspConfig {
  int m = 0, n = 0;
  double beta = 0.0;
  double gamma_tilde = 0.0;
  AngleConfig cover;  // the three-line configuration (1/n, 1/m, beta)
};

// Validates angles, sorts them, computes gamma. Throws DomainError when any
// beta lies outside (0,1) or fewer than three angles are given (the two-line
// case is rejected, not guessed).
AngleConfig validate_config(const std::vector<double>& betas);

// Equality against the semistable walls is decided at this absolute
// tolerance; wall membership is opt-in explicit, not a float accident.
inline constexpr double kWallTolerance = 1e-12;

StabilityClass classify_stability(const Weights& w,
                                  double tol = kWallTolerance);

// Derives the covering three-line configuration for a cuspidal curve.
// Throws UnstableRangeError when beta <= 1 + 1/n - 1/m (the stable range)
// and DomainError for beta >= 1 or m, n out of order.
CuspConfig cusp_angles(int m, int n, double beta);

}  // namespace ccy
