#include "seisfrag/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "seisfrag/common.hpp"

namespace seisfrag {

namespace {

// phi_{n-1}(x), phi_n(x) of the orthonormal probabilists' Hermite family.
std::pair<double, double> hermite_pair(std::size_t n, double x) {
  double prev = 0.0, cur = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) /
                        std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
  }
  return {prev, cur};
}

}  // namespace

GaussHermiteRule gauss_hermite(std::size_t n) {
  if (n == 0) throw DomainError("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double x = eig.eigenvalues()[static_cast<Eigen::Index>(j)];
    for (int it = 0; it < 5; ++it) {
      const auto [pm1, pn] = hermite_pair(n, x);
      // phi_n' = sqrt(n) phi_{n-1}
      const double step = pn / (std::sqrt(static_cast<double>(n)) * pm1);
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    const double pm1 = hermite_pair(n, x).first;
    rule.nodes[j] = x;
    rule.weights[j] = 1.0 / (static_cast<double>(n) * pm1 * pm1);
  }
  // Symmetrize: the rule is exact under z -> -z.
  for (std::size_t j = 0; j < n / 2; ++j) {
    const std::size_t k = n - 1 - j;
    const double x = 0.5 * (rule.nodes[k] - rule.nodes[j]);
    const double w = 0.5 * (rule.weights[k] + rule.weights[j]);
    rule.nodes[j] = -x;
    rule.nodes[k] = x;
    rule.weights[j] = rule.weights[k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace seisfrag
