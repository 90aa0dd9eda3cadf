#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seisfrag/common.hpp"
#include "seisfrag/random.hpp"
#include "seisfrag/spce.hpp"

namespace seisfrag::baselines {

using spce::Dataset;

// ---------------------------------------------------------------------------
// Cloud analysis: ln Y = beta0 + sum_j beta_j ln x_j + e, e ~ N(0, sigma^2)

struct LinearModel {
  double beta0 = 0.0;
  Eigen::VectorXd betas;
  double sigma = 0.0;

  std::size_t input_dims() const { return static_cast<std::size_t>(betas.size()); }
  double mean_log(const Eigen::VectorXd& x) const;
};

/// OLS on [1, ln x]; sigma uses the N - M - 1 denominator.
LinearModel lm_fit(const Dataset& data);
double lm_conditional_cdf(const LinearModel& m, const Eigen::VectorXd& x, double y);
/// 1 - Phi((ln delta0 - mean) / sigma); a step at the mean when sigma = 0.
double lm_fragility(const LinearModel& m, const Eigen::VectorXd& x, double delta0);
std::vector<double> lm_sample_conditional(const LinearModel& m, const Eigen::VectorXd& x,
                                          std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// Probit classifier: P(Y >= delta0 | x) = Phi(beta0 + sum_j beta_j ln x_j)

struct ProbitModel {
  double beta0 = 0.0;
  Eigen::VectorXd betas;
  double delta0 = 0.0;

  std::size_t input_dims() const { return static_cast<std::size_t>(betas.size()); }
};

/// Thrown when the labels are (quasi-)completely separated and the
/// maximum-likelihood coefficients diverge.
class SeparationError : public FitError {
 public:
  using FitError::FitError;
};

struct ProbitOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
  /// Coefficient norm beyond which the fit is declared divergent.
  double divergence_norm = 1e3;
};

ProbitModel probit_fit(const Dataset& data, double delta0, const ProbitOptions& options = {});
double probit_fragility(const ProbitModel& m, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Kernel conditional CDF estimator in log space:
// F(y | x) = sum_i Phi((ln y - ln y_i) / bw_y) K(x, x_i) / sum_i K(x, x_i)

struct KcdeModel {
  Eigen::MatrixXd train_x_log;
  Eigen::VectorXd train_y_log;
  Eigen::VectorXd bw_x;
  double bw_y = 0.0;
  /// Set when the bandwidth search fell back to the rule of thumb.
  std::string warning;

  std::size_t input_dims() const { return static_cast<std::size_t>(bw_x.size()); }
  void validate() const;
  /// Normalized kernel weights of every training point at x.
  Eigen::VectorXd weights(const Eigen::VectorXd& x) const;
};

struct KcdeOptions {
  std::size_t folds = 5;
  /// Held-out points scored per objective evaluation.
  std::size_t max_eval_points = 400;
  std::size_t y_grid_points = 25;
  /// Larger training sets tune bandwidths on a subsample of this size and
  /// rescale them by (n_sub / N)^(1 / (4 + d)).
  std::size_t max_cv_train = 5000;
  int max_iterations = 300;
  std::uint64_t seed = 1;
};

/// Rule-of-thumb bandwidths 1.06 s N^(-1/(4 + d)) per log dimension, d = M + 1.
void kcde_rule_of_thumb(const Eigen::MatrixXd& x_log, const Eigen::VectorXd& y_log,
                        Eigen::VectorXd& bw_x, double& bw_y);

/// Cross-validated integrated squared CDF error of the given bandwidths.
double kcde_cv_objective(const Eigen::MatrixXd& x_log, const Eigen::VectorXd& y_log,
                         const Eigen::VectorXd& bw_x, double bw_y, const KcdeOptions& options);

KcdeModel kcde_fit(const Dataset& data, const KcdeOptions& options = {});
double kcde_conditional_cdf(const KcdeModel& m, const Eigen::VectorXd& x, double y);
double kcde_fragility(const KcdeModel& m, const Eigen::VectorXd& x, double delta0);
/// Draws from the kernel mixture: pick i with weight K(x, x_i), then add N(0, bw_y^2) in log space.
std::vector<double> kcde_sample_conditional(const KcdeModel& m, const Eigen::VectorXd& x,
                                            std::size_t n, Rng& rng);

}  // namespace seisfrag::baselines
