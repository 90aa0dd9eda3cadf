#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "seisfrag/common.hpp"
#include "seisfrag/metrics.hpp"

using namespace seisfrag;
using namespace seisfrag::metrics;

namespace {

std::vector<double> normals(std::size_t n, double mu, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = mu + sd * rng.normal();
  return v;
}

// Synthetic conditional model ln Y | x ~ N(m(x), s(x)^2) evaluated at a few points.
struct Synthetic {
  std::vector<double> means, sds;
  ValidationBundle bundle;
};

Synthetic synthetic(std::size_t points, std::size_t reps, std::uint64_t seed) {
  Synthetic s;
  Rng rng(seed);
  std::vector<double> pool;
  for (int i = 0; i < 200000; ++i) {
    const double u = rng.normal();
    pool.push_back(-3.0 + 0.8 * u + (0.2 + 0.1 * std::abs(u)) * rng.normal());
  }
  s.bundle.pool_variance = population_variance(pool);
  for (std::size_t p = 0; p < points; ++p) {
    const double u = rng.normal();
    s.means.push_back(-3.0 + 0.8 * u);
    s.sds.push_back(0.2 + 0.1 * std::abs(u));
    s.bundle.points.push_back({0.01, 10.0, 12.0, 5.0, 0.9});
    s.bundle.references.emplace_back(normals(reps, s.means.back(), s.sds.back(), seed + 1 + p));
  }
  return s;
}

}  // namespace

TEST(EmpiricalDistribution, SortsAndRejectsBadInput) {
  const EmpiricalDistribution d({3.0, 1.0, 2.0});
  EXPECT_EQ(d.sorted_values(), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_DOUBLE_EQ(d.exceedance(2.0), 1.0 / 3.0);
  EXPECT_THROW(EmpiricalDistribution(std::vector<double>{}), DomainError);
  EXPECT_THROW(EmpiricalDistribution({1.0, NAN}), DomainError);
}

TEST(Wasserstein, IdenticalSamplesAreAtZero) {
  const EmpiricalDistribution a(normals(1000, 0.0, 1.0, 1));
  EXPECT_EQ(wasserstein2_sq(a, a), 0.0);
}

TEST(Wasserstein, UnequalSizesUseTheMergedGrid) {
  const EmpiricalDistribution a({0.0, 1.0}), b({0.0, 1.0, 2.0});
  EXPECT_NEAR(wasserstein2_sq(a, b), 0.5, 1e-15);
  EXPECT_NEAR(wasserstein2_sq(EmpiricalDistribution({2.0}), b), (4.0 + 1.0 + 0.0) / 3.0, 1e-15);
}

TEST(Wasserstein, GaussianClosedForm) {
  const EmpiricalDistribution a(normals(100000, 0.0, 1.0, 2)), b(normals(100000, 1.0, 1.0, 3));
  EXPECT_NEAR(wasserstein2_sq(a, b), 1.0, 0.02);
  const EmpiricalDistribution c(normals(100000, 0.0, 2.0, 4));
  EXPECT_NEAR(wasserstein2_sq(a, c), 1.0, 0.02);
}

TEST(Wasserstein, TranslationAddsTheSquaredShift) {
  const auto v = normals(777, 0.3, 0.5, 5);
  auto w = v;
  for (double& x : w) x += 0.7;
  EXPECT_NEAR(wasserstein2_sq(EmpiricalDistribution(v), EmpiricalDistribution(w)), 0.49, 1e-12);
}

TEST(Wasserstein, SymmetricAndTriangle) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng rng(100 + s);
    const EmpiricalDistribution a(normals(50 + rng.index(200), rng.normal(), 1.0 + rng.uniform(), 200 + s));
    const EmpiricalDistribution b(normals(50 + rng.index(200), rng.normal(), 1.0 + rng.uniform(), 300 + s));
    const EmpiricalDistribution c(normals(50 + rng.index(200), rng.normal(), 1.0 + rng.uniform(), 400 + s));
    const double ab = wasserstein2_sq(a, b), ba = wasserstein2_sq(b, a);
    EXPECT_NEAR(ab, ba, 1e-12 * std::max(1.0, ab));
    EXPECT_GT(ab, 0.0);
    EXPECT_LE(std::sqrt(wasserstein2_sq(a, c)), std::sqrt(ab) + std::sqrt(wasserstein2_sq(b, c)) + 1e-12);
  }
}

TEST(NormalizedWs, ResamplingTheReferencesIsNearZero) {
  const Synthetic s = synthetic(40, 250, 6);
  const LogSampler self = [&](std::size_t i, std::size_t n, Rng& rng) {
    const auto& v = s.bundle.references[i].sorted_values();
    std::vector<double> out(n);
    for (double& x : out) x = v[rng.index(v.size())];
    return out;
  };
  const LogSampler truth = [&](std::size_t i, std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    for (double& x : out) x = s.means[i] + s.sds[i] * rng.normal();
    return out;
  };
  const double e_self = normalized_ws_error(self, s.bundle, 10000, 7);
  EXPECT_LT(e_self, 0.005);
  EXPECT_LT(normalized_ws_error(truth, s.bundle, 10000, 7), 0.02);
  EXPECT_GT(e_self, 0.0);
}

TEST(NormalizedWs, ConstantMedianSurrogate) {
  const Synthetic s = synthetic(40, 250, 8);
  const double c = -3.0;
  const LogSampler constant = [&](std::size_t, std::size_t n, Rng&) { return std::vector<double>(n, c); };
  double expected = 0.0;
  for (const auto& r : s.bundle.references) {
    double acc = 0.0;
    for (double v : r.sorted_values()) acc += (v - c) * (v - c);
    expected += acc / static_cast<double>(r.size());
  }
  expected /= static_cast<double>(s.bundle.references.size()) * s.bundle.pool_variance;
  const double e = normalized_ws_error(constant, s.bundle, 1000, 9);
  EXPECT_NEAR(e, expected, 1e-12);
  EXPECT_GT(e, 0.7);
}

TEST(NormalizedWs, DeterministicAndThreadIndependent) {
  const Synthetic s = synthetic(20, 100, 10);
  const LogSampler truth = [&](std::size_t i, std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    for (double& x : out) x = s.means[i] + 1.2 * s.sds[i] * rng.normal();
    return out;
  };
  const double a = normalized_ws_error(truth, s.bundle, 2000, 11);
  EXPECT_EQ(a, normalized_ws_error(truth, s.bundle, 2000, 11));
  EXPECT_EQ(a, normalized_ws_error(truth, s.bundle, 2000, 11, 3));
  EXPECT_NE(a, normalized_ws_error(truth, s.bundle, 2000, 12));
}

TEST(NormalizedWs, ShiftInvariance) {
  Synthetic s = synthetic(10, 100, 13);
  const LogSampler wide = [&](std::size_t i, std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    for (double& x : out) x = s.means[i] + 1.5 * s.sds[i] * rng.normal();
    return out;
  };
  const double a = normalized_ws_error(wide, s.bundle, 2000, 14);
  ValidationBundle shifted = s.bundle;
  for (auto& r : shifted.references) {
    auto v = r.sorted_values();
    for (double& x : v) x += 5.0;
    r = EmpiricalDistribution(v);
  }
  const LogSampler wide_shifted = [&](std::size_t i, std::size_t n, Rng& rng) {
    auto v = wide(i, n, rng);
    for (double& x : v) x += 5.0;
    return v;
  };
  EXPECT_NEAR(normalized_ws_error(wide_shifted, shifted, 2000, 14), a, 1e-9 * a);
}

TEST(FragilityRelMse, Identities) {
  const std::vector<double> p{0.1, 0.5, 0.9, 0.3, 0.2};
  EXPECT_EQ(fragility_rel_mse(p, p), 0.0);
  double mean = 0.0;
  for (double v : p) mean += v / 5.0;
  EXPECT_NEAR(fragility_rel_mse(p, std::vector<double>(5, mean)), 1.0, 1e-14);
  EXPECT_THROW(fragility_rel_mse({0.2, 0.2}, {0.1, 0.3}), DomainError);
  EXPECT_THROW(fragility_rel_mse({0.2, 0.3}, {0.1}), DomainError);
}

TEST(FragilityRelMse, RandomPerturbation) {
  Rng rng(15);
  std::vector<double> ref(100000), model(100000);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ref[i] = rng.uniform();
    model[i] = ref[i] + 0.05 * rng.normal();
  }
  EXPECT_NEAR(fragility_rel_mse(ref, model), 0.0025 * 12.0, 0.0025 * 12.0 * 0.02);
}

TEST(EmpiricalCcdf, LimitsAndMedian) {
  const auto v = normals(1001, 0.0, 1.0, 16);
  const double med = median(v);
  const auto c = empirical_ccdf(v, {-100.0, med, 100.0});
  EXPECT_EQ(c[0], 1.0);
  EXPECT_NEAR(c[1], 0.5, 1.0 / 1001);
  EXPECT_EQ(c[2], 0.0);
  EXPECT_THROW(empirical_ccdf({}, {1.0}), DomainError);
}

TEST(EmpiricalCcdf, CountingOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = normals(1 + rng.index(60), 0.0, 1.0, 1000 + static_cast<std::uint64_t>(trial));
    std::vector<double> grid(5);
    for (double& g : grid) g = rng.index(4) == 0 ? v[rng.index(v.size())] : 2.0 * rng.normal();
    const auto c = empirical_ccdf(v, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto count = std::count_if(v.begin(), v.end(), [&](double y) { return y >= grid[k]; });
      EXPECT_EQ(c[k], static_cast<double>(count) / static_cast<double>(v.size()));
    }
  }
}

TEST(Summary, PopulationVarianceAndMedian) {
  EXPECT_DOUBLE_EQ(population_variance({1.0, 2.0, 3.0, 4.0}), 1.25);
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}
