#pragma once

// Stochastic polynomial chaos expansion of ln Y given x:
//
//   ln Y_x  ~  sum_a c_a psi_a(T(x), Z) + eps,   Z ~ N(0,1), eps ~ N(0, sigma^2)
//
// The latent variable Z is always the last multi-index dimension. The
// likelihood integrates Z out with a Gauss-Hermite rule; sigma is a
// hyper-parameter picked by cross-validation together with the truncation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "seisfrag/gm_model.hpp"
#include "seisfrag/prob_transforms.hpp"
#include "seisfrag/quadrature.hpp"
#include "seisfrag/random.hpp"

namespace seisfrag::spce {

/// Training inputs (one row per sample, physical scale) and positive outputs.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd outputs;

  std::size_t size() const { return static_cast<std::size_t>(outputs.size()); }
  std::size_t dims() const { return static_cast<std::size_t>(inputs.cols()); }
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct SpceMeta {
  std::size_t n_train = 0;
  double cv_score = 0.0;  ///< mean held-out log-likelihood per sample
  std::uint64_t seed = 0;
};

class SpceModel {
 public:
  SpceModel(transforms::TruncationSet truncation, Eigen::VectorXd coeffs, double sigma,
            transforms::InputTransform transform, std::size_t nq = 32);

  const transforms::TruncationSet& truncation() const { return truncation_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  double sigma() const { return sigma_; }
  const transforms::InputTransform& transform() const { return transform_; }
  std::size_t nq() const { return rule_.size(); }
  const GaussHermiteRule& rule() const { return rule_; }
  std::size_t input_dims() const { return transform_.dims(); }

  SpceMeta meta;

  /// Coefficients of m(x, Z) = sum_d b_d phi_d(Z) for physical input x.
  Eigen::VectorXd latent_polynomial(const Eigen::VectorXd& x) const;
  /// m(x, z).
  double mean_function(const Eigen::VectorXd& x, double z) const;

  /// Flips the coefficients of odd-in-Z terms (an equivalent model) so that the
  /// largest-magnitude Z-linear coefficient is positive.
  void canonicalize_sign();

 private:
  transforms::TruncationSet truncation_;
  Eigen::VectorXd coeffs_;
  double sigma_;
  transforms::InputTransform transform_;
  GaussHermiteRule rule_;
  int max_latent_degree_ = 0;
};

/// Precomputed basis tables for the quadrature likelihood of a fixed data set.
class QuadratureLikelihood {
 public:
  QuadratureLikelihood(const transforms::TruncationSet& trunc, const Eigen::MatrixXd& h,
                       const Eigen::VectorXd& log_y, const GaussHermiteRule& rule);

  /// Sum of per-sample log-likelihoods; optional gradients w.r.t. c and sigma.
  double evaluate(const Eigen::VectorXd& c, double sigma, Eigen::VectorXd* grad_c = nullptr,
                  double* grad_sigma = nullptr) const;

  std::size_t samples() const { return static_cast<std::size_t>(log_y_.size()); }
  std::size_t terms() const { return static_cast<std::size_t>(basis_x_.cols()); }
  const Eigen::MatrixXd& basis_x() const { return basis_x_; }

 private:
  Eigen::MatrixXd basis_x_;  ///< N x P input part of every basis function
  Eigen::MatrixXd basis_z_;  ///< NQ x P latent part at each node
  Eigen::VectorXd log_y_;
  Eigen::VectorXd log_w_;
  double sum_log_y_ = 0.0;
};

/// Quadrature log-likelihood of the data under (c, sigma).
double log_likelihood(const Eigen::VectorXd& c, double sigma, const Dataset& data,
                      const transforms::TruncationSet& trunc,
                      const transforms::InputTransform& transform, std::size_t nq);

/// Input-part basis table prod_j phi_{a_j}(h_j) for every member of trunc.
Eigen::MatrixXd input_basis(const transforms::TruncationSet& trunc, const Eigen::MatrixXd& h);

struct FitConfig {
  std::size_t nq = 32;
  /// The final model doubles nq (up to max_nq) until the log-likelihood
  /// changes by less than nq_tolerance (relative) between nq and 2 nq.
  double nq_tolerance = 1e-6;
  std::size_t max_nq = 256;
  std::vector<int> degree_grid{1, 2, 3};
  std::vector<double> q_grid{0.75, 1.0};
  /// Candidate sigma values as fractions of the residual std of the OLS fit.
  std::vector<double> sigma_grid = default_sigma_grid();
  std::size_t folds = 5;
  int restarts = 3;      ///< multi-starts of the final refit
  int cv_restarts = 1;   ///< multi-starts of each cross-validation fit
  int max_iterations = 400;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Input transform; fitted as a joint lognormal on the inputs when absent.
  std::optional<transforms::InputTransform> transform;
  /// Use this truncation instead of the (degree, q) grid.
  std::optional<transforms::TruncationSet> fixed_truncation;

  static std::vector<double> default_sigma_grid();
  void validate() const;
};

/// Cross-validation record of one (truncation, sigma) candidate.
struct CandidateScore {
  int degree = 0;
  double q = 1.0;
  double sigma = 0.0;
  double cv_score = 0.0;
};

struct FitReport {
  std::vector<CandidateScore> candidates;
  std::size_t selected = 0;
  double residual_std = 0.0;
  std::size_t nq = 0;  ///< quadrature size of the returned model
};

/// Maximum-likelihood coefficients for fixed truncation and sigma.
Eigen::VectorXd fit_coefficients(const QuadratureLikelihood& lik,
                                 const transforms::TruncationSet& trunc,
                                 const Eigen::VectorXd& log_y, double sigma, int restarts,
                                 std::uint64_t seed, int max_iterations);

/// Selects truncation and sigma by k-fold out-of-sample likelihood, then
/// refits on all data. Throws FitError if every candidate fails.
SpceModel fit(const Dataset& data, const FitConfig& cfg, FitReport* report = nullptr);

/// F(y | x) = sum_j w_j Phi((ln y - m(x, z_j)) / sigma).
double conditional_cdf(const SpceModel& model, const Eigen::VectorXd& x, double y);

/// y = exp(m(x, Z) + eps).
std::vector<double> sample_conditional(const SpceModel& model, const Eigen::VectorXd& x,
                                       std::size_t n, Rng& rng);

/// P(Y > delta0 | x).
double fragility(const SpceModel& model, const Eigen::VectorXd& x, double delta0);

/// Jointly samples (X, Z, eps).
std::vector<double> sample_unconditional(const SpceModel& model, const gm::ParamsJointModel& joint,
                                         std::size_t n, Rng& rng);

/// Fragility over an (ia, omega_g) grid averaged over (t_mid, d595) drawn from
/// their Gaussian-copula conditional given (ia, omega_g). Rows follow ia_grid,
/// columns omega_grid. The same nuisance draws are reused at every grid point.
Eigen::MatrixXd averaged_fragility_surface(const SpceModel& model,
                                           const gm::ParamsJointModel& joint,
                                           const std::vector<double>& ia_grid,
                                           const std::vector<double>& omega_grid, double delta0,
                                           std::size_t n_nuisance, Rng& rng);

/// Draws (t_mid, d595) given (ia, omega_g) under the joint model.
std::vector<gm::GroundMotionParams> sample_nuisance(const gm::ParamsJointModel& joint, double ia,
                                                    double omega_g, std::size_t n, Rng& rng);

}  // namespace seisfrag::spce
