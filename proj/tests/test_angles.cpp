#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ccy/angles.hpp"
#include "ccy/errors.hpp"

using namespace ccy;

TEST_CASE("validate_config sorts and derives gamma") {
  const AngleConfig c = validate_config({0.9, 0.3, 0.85});
  CHECK(c.betas == std::vector<double>{0.3, 0.85, 0.9});
  CHECK(c.gamma == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(c.strict_instability);
  CHECK(c.gamma_in_range);
  // permutation maps sorted slots back to the input order
  CHECK(c.permutation == std::vector<int>{1, 2, 0});
}

TEST_CASE("symmetric config is flagged, not rejected") {
  const AngleConfig c = validate_config({0.5, 0.5, 0.5});
  CHECK(c.gamma == doctest::Approx(0.0));
  CHECK_FALSE(c.strict_instability);
  CHECK_FALSE(c.gamma_in_range);
}

TEST_CASE("out-of-range angles and short lists are rejected") {
  CHECK_THROWS_AS(validate_config({0.3, 1.2, 0.9}), DomainError);
  CHECK_THROWS_AS(validate_config({0.3, 0.0, 0.9}), DomainError);
  CHECK_THROWS_AS(validate_config({0.3, 0.9}), DomainError);
}

TEST_CASE("gamma identity holds to machine precision") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> b{u(rng), u(rng), u(rng), u(rng)};
    const AngleConfig c = validate_config(b);
    double tail = 0;
    for (std::size_t j = 1; j < c.betas.size(); ++j) tail += 1 - c.betas[j];
    CHECK(std::abs((1 - c.gamma) - tail) <= 1e-15 * 4);
  }
}

TEST_CASE("stability classification") {
  CHECK(classify_stability({{0.7, 0.15, 0.10}}).tag == StabilityTag::Unstable);
  CHECK(classify_stability({{0.7, 0.15, 0.10}}).unstable_index == 0);
  CHECK(classify_stability({{0.5, 0.5, 0.5}}).tag == StabilityTag::Stable);
  CHECK(classify_stability({{0.5, 0.3, 0.2}}).tag == StabilityTag::Semistable);
  CHECK(classify_stability({{0.9, 0.8, 0.5}}).tag == StabilityTag::NotKLT);
}

TEST_CASE("classification is permutation invariant") {
  const Weights w{{0.62, 0.11, 0.2}};
  const auto base = classify_stability(w);
  REQUIRE(base.tag == StabilityTag::Unstable);
  Weights p{{0.11, 0.2, 0.62}};
  const auto alt = classify_stability(p);
  CHECK(alt.tag == base.tag);
  CHECK(p.mus[*alt.unstable_index] == w.mus[*base.unstable_index]);
}

TEST_CASE("classes partition weight space") {
  std::mt19937_64 rng(20240803);
  std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
  int counts[4] = {0, 0, 0, 0};
  for (int it = 0; it < 10000; ++it) {
    Weights w;
    const int d = 3 + static_cast<int>(rng() % 3);
    for (int j = 0; j < d; ++j) w.mus.push_back(u(rng));
    const auto s = classify_stability(w);
    ++counts[static_cast<int>(s.tag)];
    CHECK((s.tag == StabilityTag::Unstable) == s.unstable_index.has_value());
  }
  CHECK(counts[0] > 0);  // stable
  CHECK(counts[2] > 0);  // unstable
  CHECK(counts[3] > 0);  // not klt
}

TEST_CASE("cusp angles") {
  const CuspConfig c = cusp_angles(2, 3, 0.9);
  CHECK(c.gamma_tilde == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(c.cover.betas[0] == doctest::Approx(1.0 / 3));
  CHECK(c.cover.betas[1] == doctest::Approx(0.5));
  CHECK(c.cover.betas[2] == doctest::Approx(0.9));
  CHECK(c.cover.strict_instability);

  CHECK(cusp_angles(3, 4, 0.95).gamma_tilde == doctest::Approx(0.85));
  CHECK_THROWS_AS(cusp_angles(2, 3, 0.8), UnstableRangeError);
  CHECK_THROWS_AS(cusp_angles(2, 3, 1.0), DomainError);
  CHECK_THROWS_AS(cusp_angles(3, 2, 0.9), DomainError);
}

TEST_CASE("cusp covers satisfy the strict angle inequality on samples") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 500; ++it) {
    const int m = 2 + static_cast<int>(rng() % 4);
    const int n = m + 1 + static_cast<int>(rng() % 4);
    const double lower = 1.0 + 1.0 / n - 1.0 / m;
    std::uniform_real_distribution<double> u(lower + 1e-9, 1.0 - 1e-9);
    const CuspConfig c = cusp_angles(m, n, u(rng));
    double tail = 0;
    for (std::size_t j = 1; j < c.cover.betas.size(); ++j)
      tail += 1 - c.cover.betas[j];
    CHECK(tail < 1 - c.cover.betas.front());
  }
  // On the boundary beta = 1 + 1/n - 1/m the inequality closes exactly:
  // (1 - 1/m) + (1 - beta) = 1 - 1/n.
  for (int m = 2; m <= 5; ++m)
    for (int n = m + 1; n <= 7; ++n) {
      const double b = 1.0 + 1.0 / n - 1.0 / m;
      CHECK(std::abs((1.0 - 1.0 / m) + (1.0 - b) - (1.0 - 1.0 / n)) < 1e-12);
    }
}
