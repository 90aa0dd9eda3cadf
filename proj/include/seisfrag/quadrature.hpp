#pragma once

#include <cstddef>
#include <vector>

namespace seisfrag {

/// Gauss rule for the standard normal weight: sum_j w_j f(z_j) ~ E[f(Z)].
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Nodes from the Jacobi matrix, refined by Newton steps on phi_n; weights
/// from 1 / (n phi_{n-1}(z_j)^2) so tiny tail weights keep full relative accuracy.
GaussHermiteRule gauss_hermite(std::size_t n);

}  // namespace seisfrag
