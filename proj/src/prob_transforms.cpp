#include "seisfrag/prob_transforms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "seisfrag/common.hpp"

namespace seisfrag::transforms {

InputTransform::InputTransform(Eigen::VectorXd log_means, Eigen::VectorXd log_stds,
                               Eigen::MatrixXd correlation)
    : log_means_(std::move(log_means)),
      log_stds_(std::move(log_stds)),
      correlation_(std::move(correlation)) {
  const auto m = log_means_.size();
  if (m == 0 || log_stds_.size() != m || correlation_.rows() != m || correlation_.cols() != m)
    throw DomainError("InputTransform: inconsistent dimensions");
  if ((log_stds_.array() <= 0.0).any())
    throw DomainError("InputTransform: log standard deviations must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_);
  if (llt.info() != Eigen::Success)
    throw DomainError("InputTransform: correlation matrix is not positive definite");
  cholesky_ = llt.matrixL();
}

InputTransform InputTransform::from_joint(const gm::ParamsJointModel& joint) {
  return {joint.log_means(), joint.log_stds(), joint.correlation()};
}

InputTransform InputTransform::fit_lognormal(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw DomainError("fit_lognormal: need at least two rows");
  if ((samples.array() <= 0.0).any()) throw DomainError("fit_lognormal: samples must be positive");
  const Eigen::MatrixXd logs = samples.array().log().matrix();
  const Eigen::VectorXd mean = logs.colwise().mean();
  const Eigen::MatrixXd centered = logs.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(logs.rows());
  const Eigen::VectorXd sd = cov.diagonal().array().sqrt();
  Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  corr.diagonal().setOnes();
  return {mean, sd, corr};
}

Eigen::VectorXd InputTransform::to_standard(const Eigen::VectorXd& x) const {
  if (x.size() != log_means_.size()) throw DomainError("to_standard: dimension mismatch");
  if ((x.array() <= 0.0).any()) throw DomainError("to_standard: inputs must be positive");
  const Eigen::VectorXd u = (x.array().log() - log_means_.array()) / log_stds_.array();
  return cholesky_.triangularView<Eigen::Lower>().solve(u);
}

Eigen::VectorXd InputTransform::from_standard(const Eigen::VectorXd& h) const {
  if (h.size() != log_means_.size()) throw DomainError("from_standard: dimension mismatch");
  return (log_means_.array() + log_stds_.array() * (cholesky_ * h).array()).exp();
}

Eigen::MatrixXd InputTransform::to_standard_rows(const Eigen::MatrixXd& x) const {
  if (x.cols() != log_means_.size()) throw DomainError("to_standard_rows: dimension mismatch");
  if ((x.array() <= 0.0).any()) throw DomainError("to_standard_rows: inputs must be positive");
  Eigen::MatrixXd u = x.array().log().matrix();
  u = (u.rowwise() - log_means_.transpose()).array().rowwise() / log_stds_.transpose().array();
  // h^T = u^T L^-T  <=>  L h = u
  return cholesky_.triangularView<Eigen::Lower>().solve(u.transpose()).transpose();
}

Eigen::VectorXd InputTransform::to_standard(const gm::GroundMotionParams& x) const {
  const auto r = x.random_part();
  return to_standard(Eigen::Map<const Eigen::Vector4d>(r.data()).eval());
}

gm::GroundMotionParams InputTransform::params_from_standard(const Eigen::VectorXd& h) const {
  const Eigen::VectorXd x = from_standard(h);
  if (x.size() != 4) throw DomainError("params_from_standard: transform is not 4-dimensional");
  return {x[0], x[1], x[2], x[3], gm::kDefaultZetaG};
}

double hermite(int k, double h) {
  if (k < 0) throw DomainError("hermite: degree must be non-negative");
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = h;
  for (int j = 1; j < k; ++j) {
    const double next = (h * cur - std::sqrt(static_cast<double>(j)) * prev) /
                        std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_all(int p, double h, double* out) {
  out[0] = 1.0;
  if (p == 0) return;
  out[1] = h;
  for (int j = 1; j < p; ++j)
    out[j + 1] = (h * out[j] - std::sqrt(static_cast<double>(j)) * out[j - 1]) /
                 std::sqrt(static_cast<double>(j + 1));
}

int total_degree(const MultiIndex& alpha) {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

double q_norm(const MultiIndex& alpha, double q) {
  double s = 0.0;
  for (int a : alpha)
    if (a > 0) s += std::pow(static_cast<double>(a), q);
  return std::pow(s, 1.0 / q);
}

TruncationSet build_truncation(std::size_t dims, int p, double q) {
  if (dims == 0) throw DomainError("build_truncation: dims must be positive");
  if (p < 0) throw DomainError("build_truncation: degree must be non-negative");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("build_truncation: q must lie in (0, 1]");
  TruncationSet set;
  set.max_degree = p;
  set.q_norm = q;

  MultiIndex alpha(dims, 0);
  std::function<void(std::size_t, int)> recurse = [&](std::size_t j, int budget) {
    if (j == dims) {
      if (q_norm(alpha, q) <= static_cast<double>(p) + 1e-10) set.indices.push_back(alpha);
      return;
    }
    for (int a = 0; a <= budget; ++a) {
      alpha[j] = a;
      recurse(j + 1, budget - a);
    }
    alpha[j] = 0;
  };
  recurse(0, p);

  std::sort(set.indices.begin(), set.indices.end(), [](const MultiIndex& a, const MultiIndex& b) {
    const int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a > b;
  });
  return set;
}

double basis_eval(const MultiIndex& alpha, const Eigen::VectorXd& h, double z) {
  const auto m = static_cast<std::size_t>(h.size());
  if (alpha.size() != m + 1) throw DomainError("basis_eval: multi-index has wrong length");
  double v = 1.0;
  for (std::size_t j = 0; j < m; ++j)
    if (alpha[j] > 0) v *= hermite(alpha[j], h[static_cast<Eigen::Index>(j)]);
  if (alpha[m] > 0) v *= hermite(alpha[m], z);
  return v;
}

}  // namespace seisfrag::transforms
