#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seisfrag/gm_model.hpp"

namespace seisfrag::transforms {

/// Isoprobabilistic map between dependent lognormal inputs (Gaussian copula)
/// and independent standard normals: h = L^-1 ((ln x - mu) / sigma).
///
/// With lognormal marginals the copula correlation is the correlation of ln x,
/// so the Nataf map is exactly linear in the logarithms.
class InputTransform {
 public:
  InputTransform(Eigen::VectorXd log_means, Eigen::VectorXd log_stds,
                 Eigen::MatrixXd correlation);

  static InputTransform from_joint(const gm::ParamsJointModel& joint);
  /// Moment fit of a joint lognormal model to rows of positive samples.
  static InputTransform fit_lognormal(const Eigen::MatrixXd& samples);

  std::size_t dims() const { return static_cast<std::size_t>(log_means_.size()); }
  const Eigen::VectorXd& log_means() const { return log_means_; }
  const Eigen::VectorXd& log_stds() const { return log_stds_; }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  const Eigen::MatrixXd& cholesky() const { return cholesky_; }

  /// Throws DomainError on non-positive components.
  Eigen::VectorXd to_standard(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_standard(const Eigen::VectorXd& h) const;
  /// Row-wise to_standard.
  Eigen::MatrixXd to_standard_rows(const Eigen::MatrixXd& x) const;

  Eigen::VectorXd to_standard(const gm::GroundMotionParams& x) const;
  gm::GroundMotionParams params_from_standard(const Eigen::VectorXd& h) const;

 private:
  Eigen::VectorXd log_means_;
  Eigen::VectorXd log_stds_;
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd cholesky_;
};

/// Orthonormal (probabilists') Hermite polynomial He_k(h) / sqrt(k!).
double hermite(int k, double h);
/// Writes phi_0(h)..phi_p(h) into out (size p + 1).
void hermite_all(int p, double h, double* out);

/// Polynomial degrees per dimension; the last entry is the latent variable
/// when used in a stochastic expansion.
using MultiIndex = std::vector<int>;

int total_degree(const MultiIndex& alpha);
double q_norm(const MultiIndex& alpha, double q);

struct TruncationSet {
  std::vector<MultiIndex> indices;
  int max_degree = 0;
  double q_norm = 1.0;

  std::size_t size() const { return indices.size(); }
  std::size_t dims() const { return indices.empty() ? 0 : indices.front().size(); }
};

/// All alpha with ||alpha||_q <= p, sorted by total degree and then
/// lexicographically descending (e.g. 00, 10, 01, 20, 11, 02).
TruncationSet build_truncation(std::size_t dims, int p, double q);

/// psi_alpha(h, z) = prod_j phi_{alpha_j}(h_j) * phi_{alpha_last}(z).
double basis_eval(const MultiIndex& alpha, const Eigen::VectorXd& h, double z);

}  // namespace seisfrag::transforms
