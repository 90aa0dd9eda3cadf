#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "seisfrag/common.hpp"
#include "seisfrag/prob_transforms.hpp"
#include "seisfrag/quadrature.hpp"

using namespace seisfrag;
using namespace seisfrag::transforms;

namespace {

InputTransform table1() { return InputTransform::from_joint(gm::ParamsJointModel::table1()); }

}  // namespace

TEST(InputTransform, MediansMapToOrigin) {
  const auto t = table1();
  const Eigen::VectorXd x = t.log_means().array().exp();
  EXPECT_LT(t.to_standard(x).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((t.from_standard(Eigen::VectorXd::Zero(4)) - x).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(InputTransform, RoundTrip) {
  const auto t = table1();
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd h(4);
    for (int d = 0; d < 4; ++d) h[d] = 3.0 * rng.normal();
    EXPECT_LT((t.to_standard(t.from_standard(h)) - h).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::VectorXd x = t.from_standard(h);
    EXPECT_LT(((t.from_standard(t.to_standard(x)) - x).array() / x.array()).abs().maxCoeff(), 1e-10);
  }
}

TEST(InputTransform, StandardizedSamplesAreStandardNormal) {
  const auto t = table1();
  Rng rng(2);
  const auto xs = gm::sample_params(gm::ParamsJointModel::table1(), 100000, rng);
  std::vector<std::vector<double>> cols(4);
  for (const auto& x : xs) {
    const Eigen::VectorXd h = t.to_standard(x);
    for (int d = 0; d < 4; ++d) cols[d].push_back(h[d]);
  }
  for (auto& c : cols) {
    std::sort(c.begin(), c.end());
    double ks = 0.0;
    const double n = static_cast<double>(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double f = normal_cdf(c[i]);
      ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    EXPECT_LT(ks, 0.01);
  }
}

TEST(InputTransform, FirstCoordinateIsMonotoneInIa) {
  const auto t = table1();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(4);
  double prev = 0.0;
  for (double v = -6.0; v <= 6.0; v += 0.5) {
    h[0] = v;
    const double ia = t.params_from_standard(h).ia;
    EXPECT_GT(ia, prev);
    prev = ia;
  }
}

TEST(InputTransform, RejectsNonPositiveInput) {
  const auto t = table1();
  Eigen::VectorXd x(4);
  x << 0.01, -1.0, 10.0, 4.0;
  EXPECT_THROW(t.to_standard(x), DomainError);
}

TEST(InputTransform, LognormalMomentFit) {
  Rng rng(4);
  Eigen::MatrixXd s(50000, 2);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double a = rng.normal(), b = rng.normal();
    s(i, 0) = std::exp(1.0 + 0.5 * a);
    s(i, 1) = std::exp(-2.0 + 0.3 * (0.6 * a + 0.8 * b));
  }
  const auto t = InputTransform::fit_lognormal(s);
  EXPECT_NEAR(t.log_means()[0], 1.0, 0.01);
  EXPECT_NEAR(t.log_means()[1], -2.0, 0.01);
  EXPECT_NEAR(t.log_stds()[0], 0.5, 0.01);
  EXPECT_NEAR(t.log_stds()[1], 0.3, 0.01);
  EXPECT_NEAR(t.correlation()(0, 1), 0.6, 0.01);
}

TEST(Hermite, LowOrders) {
  EXPECT_EQ(hermite(0, 0.7), 1.0);
  EXPECT_EQ(hermite(1, 0.7), 0.7);
  EXPECT_NEAR(hermite(2, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(hermite(3, 2.0), (8.0 - 6.0) / std::sqrt(6.0), 1e-14);
  double all[5];
  hermite_all(4, 1.3, all);
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(all[k], hermite(k, 1.3), 1e-14);
}

TEST(Hermite, OrthonormalUnderGaussHermite) {
  const auto rule = gauss_hermite(64);
  for (int j = 0; j <= 10; ++j)
    for (int k = 0; k <= 10; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * hermite(j, rule.nodes[i]) * hermite(k, rule.nodes[i]);
      EXPECT_NEAR(s, j == k ? 1.0 : 0.0, 1e-10) << j << "," << k;
    }
}

TEST(Basis, ConstantAndLinear) {
  Eigen::VectorXd h(4);
  h << 0.3, -1.2, 0.8, 2.0;
  EXPECT_EQ(basis_eval({0, 0, 0, 0, 0}, h, 0.4), 1.0);
  EXPECT_EQ(basis_eval({1, 0, 0, 0, 0}, h, 0.4), 0.3);
  EXPECT_NEAR(basis_eval({0, 1, 0, 0, 1}, h, 0.4), -1.2 * 0.4, 1e-15);
}

TEST(Basis, MonteCarloOrthonormality) {
  const auto trunc = build_truncation(5, 4, 1.0);
  Rng rng(5);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (int p = 0; p < 20; ++p) {
    const std::size_t a = rng.index(trunc.size());
    pairs.emplace_back(a, p % 4 == 0 ? a : rng.index(trunc.size()));
  }
  std::vector<double> acc(pairs.size(), 0.0);
  const int n = 10000000;
  Eigen::VectorXd h(4);
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < 4; ++d) h[d] = rng.normal();
    const double z = rng.normal();
    for (std::size_t p = 0; p < pairs.size(); ++p)
      acc[p] += basis_eval(trunc.indices[pairs[p].first], h, z) * basis_eval(trunc.indices[pairs[p].second], h, z);
  }
  for (std::size_t p = 0; p < pairs.size(); ++p)
    EXPECT_NEAR(acc[p] / n, pairs[p].first == pairs[p].second ? 1.0 : 0.0, 0.01);
}

TEST(Truncation, TotalDegreeTwoInTwoDims) {
  const auto t = build_truncation(2, 2, 1.0);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(t.indices, expected);
}

TEST(Truncation, FiveDimsDegreeThreeCount) { EXPECT_EQ(build_truncation(5, 3, 1.0).size(), 56u); }

TEST(Truncation, HyperbolicNormDropsMixedTerm) {
  const auto t = build_truncation(2, 2, 0.5);
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(std::find(t.indices.begin(), t.indices.end(), MultiIndex{1, 1}), t.indices.end());
}

TEST(Truncation, NestedInDegree) {
  for (double q : {0.5, 0.75, 1.0})
    for (int p = 0; p < 4; ++p) {
      const auto small = build_truncation(5, p, q), large = build_truncation(5, p + 1, q);
      const std::set<MultiIndex> big(large.indices.begin(), large.indices.end());
      const std::set<MultiIndex> uniq(small.indices.begin(), small.indices.end());
      EXPECT_EQ(uniq.size(), small.size());
      EXPECT_EQ(small.indices.front(), MultiIndex(5, 0));
      for (const auto& a : small.indices) EXPECT_TRUE(big.count(a));
    }
}
