#include "ccy/angles.hpp"

#include <algorithm>
#include <numeric>

#include "ccy/errors.hpp"

namespace ccy {

double Weights::sum() const {
  return std::accumulate(mus.begin(), mus.end(), 0.0);
}

Weights Weights::from_config(const AngleConfig& c) {
  Weights w;
  w.mus.reserve(c.betas.size());
  for (double b : c.betas) w.mus.push_back(1.0 - b);
  return w;
}

AngleConfig Weights::to_config() const {
  std::vector<double> betas;
  betas.reserve(mus.size());
  for (double m : mus) betas.push_back(1.0 - m);
  return validate_config(betas);
}

AngleConfig validate_config(const std::vector<double>& betas) {
  if (betas.size() < 3)
    throw DomainError("at least three cone angles are required (d >= 3)");
  for (double b : betas)
    if (!(b > 0.0) || !(b < 1.0))
      throw DomainError("cone angle factor out of range (0,1): " +
                        format_double(b));

  AngleConfig c;
  c.permutation.resize(betas.size());
  std::iota(c.permutation.begin(), c.permutation.end(), 0);
  std::stable_sort(c.permutation.begin(), c.permutation.end(),
                   [&](int i, int j) { return betas[i] < betas[j]; });
  c.betas.reserve(betas.size());
  for (int i : c.permutation) c.betas.push_back(betas[i]);

  double tail = 0.0;  // sum_{j>=2} (1 - beta_j)
  for (std::size_t j = 1; j < c.betas.size(); ++j) tail += 1.0 - c.betas[j];
  c.gamma = 1.0 - tail;
  c.strict_instability = tail < 1.0 - c.betas.front();
  c.gamma_in_range = c.gamma > 0.0 && c.gamma < 1.0;
  return c;
}

StabilityClass classify_stability(const Weights& w, double tol) {
  for (double m : w.mus)
    if (!(m > 0.0) || !(m < 1.0))
      throw DomainError("weight out of range (0,1): " + format_double(m));

  const double total = w.sum();
  if (total >= 2.0 - tol) return {StabilityTag::NotKLT, std::nullopt};

  bool on_wall = false;
  for (std::size_t i = 0; i < w.mus.size(); ++i) {
    const double excess = w.mus[i] - (total - w.mus[i]);
    if (excess > tol) return {StabilityTag::Unstable, static_cast<int>(i)};
    if (std::abs(excess) <= tol) on_wall = true;
  }
  if (on_wall) return {StabilityTag::Semistable, std::nullopt};
  return {StabilityTag::Stable, std::nullopt};
}

CuspConfig cusp_angles(int m, int n, double beta) {
  if (m < 2 || n <= m) throw DomainError("need 2 <= m < n");
  if (!(beta < 1.0)) throw DomainError("beta must be < 1");
  const double lower = 1.0 + 1.0 / n - 1.0 / m;
  if (!(beta > lower))
    throw UnstableRangeError(
        "beta <= 1 + 1/n - 1/m lies in the stable range handled by "
        "polyhedral-cone models; this construction needs the unstable range");

  CuspConfig c;
  c.m = m;
  c.n = n;
  c.beta = beta;
  c.gamma_tilde = 1.0 - m * (1.0 - beta);
  c.cover = validate_config({1.0 / n, 1.0 / m, beta});
  if (!c.cover.strict_instability)
    throw InvariantError("cusp cover lost strict instability");
  return c;
}

}  // namespace ccy
