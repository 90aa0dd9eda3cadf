#include "seisfrag/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace seisfrag::baselines {

namespace {

Eigen::MatrixXd log_design(const Eigen::MatrixXd& inputs) {
  if ((inputs.array() <= 0.0).any()) throw DomainError("baselines: inputs must be positive");
  Eigen::MatrixXd x(inputs.rows(), inputs.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(inputs.cols()) = inputs.array().log().matrix();
  return x;
}

double linear_predictor(double beta0, const Eigen::VectorXd& betas, const Eigen::VectorXd& x) {
  if (x.size() != betas.size()) throw DomainError("baselines: input dimension mismatch");
  if ((x.array() <= 0.0).any()) throw DomainError("baselines: inputs must be positive");
  return beta0 + betas.dot(x.array().log().matrix());
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear model

double LinearModel::mean_log(const Eigen::VectorXd& x) const {
  return linear_predictor(beta0, betas, x);
}

LinearModel lm_fit(const Dataset& data) {
  data.validate();
  const std::size_t n = data.size(), m = data.dims();
  if (n <= m + 1) throw DomainError("lm_fit: need more samples than coefficients");
  const Eigen::MatrixXd x = log_design(data.inputs);
  const Eigen::VectorXd y = data.outputs.array().log().matrix();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw FitError("lm_fit: design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const double rss = (y - x * beta).squaredNorm();
  LinearModel out;
  out.beta0 = beta[0];
  out.betas = beta.tail(static_cast<Eigen::Index>(m));
  out.sigma = std::sqrt(rss / static_cast<double>(n - m - 1));
  return out;
}

double lm_conditional_cdf(const LinearModel& m, const Eigen::VectorXd& x, double y) {
  if (!(y > 0.0)) throw DomainError("lm_conditional_cdf: y must be positive");
  const double d = std::log(y) - m.mean_log(x);
  if (m.sigma == 0.0) return d > 0.0 ? 1.0 : (d < 0.0 ? 0.0 : 0.5);
  return normal_cdf(d / m.sigma);
}

double lm_fragility(const LinearModel& m, const Eigen::VectorXd& x, double delta0) {
  if (!(delta0 > 0.0)) throw DomainError("lm_fragility: delta0 must be positive");
  return 1.0 - lm_conditional_cdf(m, x, delta0);
}

std::vector<double> lm_sample_conditional(const LinearModel& m, const Eigen::VectorXd& x,
                                          std::size_t n, Rng& rng) {
  const double mu = m.mean_log(x);
  std::vector<double> out(n);
  for (auto& v : out) v = std::exp(mu + m.sigma * rng.normal());
  return out;
}

// ---------------------------------------------------------------------------
// Probit

namespace {

struct ProbitTerms {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd fisher;
};

ProbitTerms probit_terms(const Eigen::MatrixXd& x, const std::vector<char>& label,
                         const Eigen::VectorXd& beta, bool derivatives) {
  ProbitTerms t;
  const auto p = x.cols();
  if (derivatives) {
    t.gradient = Eigen::VectorXd::Zero(p);
    t.fisher = Eigen::MatrixXd::Zero(p, p);
  }
  const Eigen::VectorXd eta = x * beta;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double e = std::clamp(eta[i], -37.0, 37.0);
    const double up = normal_cdf(e), down = normal_cdf(-e), dens = normal_pdf(e);
    const bool pos = label[static_cast<std::size_t>(i)] != 0;
    t.loglik += std::log(pos ? up : down);
    if (!derivatives) continue;
    const double lambda = pos ? dens / up : -dens / down;
    const double w = dens * dens / (up * down);
    t.gradient += lambda * x.row(i).transpose();
    t.fisher.noalias() += w * x.row(i).transpose() * x.row(i);
  }
  return t;
}

}  // namespace

ProbitModel probit_fit(const Dataset& data, double delta0, const ProbitOptions& options) {
  data.validate();
  if (!(delta0 > 0.0)) throw DomainError("probit_fit: delta0 must be positive");
  const std::size_t n = data.size(), m = data.dims();
  std::vector<char> label(n);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    label[i] = data.outputs[static_cast<Eigen::Index>(i)] >= delta0 ? 1 : 0;
    positives += static_cast<std::size_t>(label[i]);
  }
  if (positives == 0 || positives == n)
    throw FitError("probit_fit: labels contain a single class");

  const Eigen::MatrixXd x = log_design(data.inputs);
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  beta[0] = normal_quantile(static_cast<double>(positives) * inv_n);

  ProbitTerms cur = probit_terms(x, label, beta, true);
  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    if (cur.gradient.norm() * inv_n < options.gradient_tolerance) {
      converged = true;
      break;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.fisher);
    if (ldlt.info() != Eigen::Success) throw FitError("probit_fit: singular information matrix");
    const Eigen::VectorXd step = ldlt.solve(cur.gradient);
    double scale = 1.0;
    Eigen::VectorXd trial;
    ProbitTerms next;
    for (int h = 0; h < 30; ++h, scale *= 0.5) {
      trial = beta + scale * step;
      next = probit_terms(x, label, trial, false);
      if (next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) break;
    }
    beta = trial;
    cur = probit_terms(x, label, beta, true);
    if (!beta.allFinite() || beta.norm() > options.divergence_norm) {
      std::ostringstream msg;
      msg << "probit_fit: coefficients diverge (|beta| = " << beta.norm()
          << ") at delta0 = " << delta0 << "; the classes are separated";
      throw SeparationError(msg.str());
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "probit_fit: no convergence after " << options.max_iterations
        << " iterations (gradient norm " << cur.gradient.norm() * inv_n << ")";
    throw SeparationError(msg.str());
  }
  // A finite maximizer cannot classify every sample strictly correctly.
  const Eigen::VectorXd eta = x * beta;
  bool all_correct = true;
  for (std::size_t i = 0; i < n && all_correct; ++i) {
    const double e = eta[static_cast<Eigen::Index>(i)];
    all_correct = label[i] ? e > 0.0 : e < 0.0;
  }
  if (all_correct) throw SeparationError("probit_fit: labels are completely separated");

  ProbitModel out;
  out.beta0 = beta[0];
  out.betas = beta.tail(static_cast<Eigen::Index>(m));
  out.delta0 = delta0;
  return out;
}

double probit_fragility(const ProbitModel& m, const Eigen::VectorXd& x) {
  return normal_cdf(linear_predictor(m.beta0, m.betas, x));
}

// ---------------------------------------------------------------------------
// KCDE

void KcdeModel::validate() const {
  if (train_y_log.size() < 1 || train_x_log.rows() != train_y_log.size())
    throw DomainError("KcdeModel: inconsistent training data");
  if (bw_x.size() != train_x_log.cols()) throw DomainError("KcdeModel: bandwidth dimension mismatch");
  if ((bw_x.array() <= 0.0).any() || !(bw_y > 0.0))
    throw DomainError("KcdeModel: bandwidths must be positive");
}

Eigen::VectorXd KcdeModel::weights(const Eigen::VectorXd& x) const {
  if (x.size() != bw_x.size()) throw DomainError("kcde: input dimension mismatch");
  if ((x.array() <= 0.0).any()) throw DomainError("kcde: inputs must be positive");
  const Eigen::RowVectorXd lx = x.array().log().matrix().transpose();
  const Eigen::RowVectorXd inv_bw = bw_x.cwiseInverse().transpose();
  const Eigen::VectorXd expo =
      -0.5 * ((train_x_log.rowwise() - lx).array().rowwise() * inv_bw.array()).square().rowwise().sum();
  Eigen::VectorXd w = (expo.array() - expo.maxCoeff()).exp().matrix();
  return w / w.sum();
}

namespace {

double sample_std(const Eigen::VectorXd& v) {
  const double mu = v.mean();
  return std::sqrt((v.array() - mu).square().sum() / static_cast<double>(std::max<Eigen::Index>(v.size() - 1, 1)));
}

}  // namespace

void kcde_rule_of_thumb(const Eigen::MatrixXd& x_log, const Eigen::VectorXd& y_log,
                        Eigen::VectorXd& bw_x, double& bw_y) {
  const double n = static_cast<double>(y_log.size());
  const double d = static_cast<double>(x_log.cols() + 1);
  const double factor = 1.06 * std::pow(n, -1.0 / (4.0 + d));
  bw_x.resize(x_log.cols());
  for (Eigen::Index j = 0; j < x_log.cols(); ++j)
    bw_x[j] = factor * std::max(sample_std(x_log.col(j)), 1e-8);
  bw_y = factor * std::max(sample_std(y_log), 1e-8);
}

namespace {

struct CvProblem {
  const Eigen::MatrixXd* x_log;
  const Eigen::VectorXd* y_log;
  std::vector<std::size_t> fold_of;
  std::vector<std::size_t> eval;
  Eigen::VectorXd y_grid;
  Eigen::MatrixXd below;  ///< eval x grid indicator 1{y_e <= y_g}

  CvProblem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KcdeOptions& opt)
      : x_log(&x), y_log(&y) {
    const std::size_t n = static_cast<std::size_t>(y.size());
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(opt.seed, Stream::fit, 0x6b6364));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    fold_of.resize(n);
    for (std::size_t k = 0; k < n; ++k) fold_of[perm[k]] = k % opt.folds;
    eval.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, opt.max_eval_points)));

    std::vector<double> sorted(y.data(), y.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const auto g = static_cast<Eigen::Index>(opt.y_grid_points);
    y_grid.resize(g);
    for (Eigen::Index k = 0; k < g; ++k) {
      const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(g);
      y_grid[k] = sorted[std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)))];
    }
    below.resize(static_cast<Eigen::Index>(eval.size()), g);
    for (std::size_t e = 0; e < eval.size(); ++e)
      for (Eigen::Index k = 0; k < g; ++k)
        below(static_cast<Eigen::Index>(e), k) = y[static_cast<Eigen::Index>(eval[e])] <= y_grid[k] ? 1.0 : 0.0;
  }

  double objective(const Eigen::VectorXd& bw_x, double bw_y) const {
    const Eigen::MatrixXd& x = *x_log;
    const Eigen::VectorXd& y = *y_log;
    const auto n = y.size();
    const auto g = y_grid.size();
    Eigen::MatrixXd phi(n, g);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < g; ++k) phi(j, k) = normal_cdf((y_grid[k] - y[j]) / bw_y);
    const Eigen::MatrixXd xs = x * bw_x.cwiseInverse().asDiagonal();
    const auto ne = static_cast<Eigen::Index>(eval.size());
    Eigen::MatrixXd xe(ne, xs.cols());
    for (Eigen::Index e = 0; e < ne; ++e) xe.row(e) = xs.row(static_cast<Eigen::Index>(eval[static_cast<std::size_t>(e)]));
    const Eigen::VectorXd sq = xs.rowwise().squaredNorm();
    const Eigen::VectorXd sqe = xe.rowwise().squaredNorm();
    Eigen::MatrixXd expo = xe * xs.transpose();
    double loss = 0.0;
    for (Eigen::Index e = 0; e < ne; ++e) {
      const std::size_t fold = fold_of[eval[static_cast<std::size_t>(e)]];
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        double v = -0.5 * std::max(0.0, sq[j] + sqe[e] - 2.0 * expo(e, j));
        if (fold_of[static_cast<std::size_t>(j)] == fold) v = -std::numeric_limits<double>::infinity();
        expo(e, j) = v;
        top = std::max(top, v);
      }
      double total = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        expo(e, j) = std::exp(expo(e, j) - top);
        total += expo(e, j);
      }
      expo.row(e) /= total;
    }
    const Eigen::MatrixXd f = expo * phi;
    loss = (below - f).squaredNorm() / static_cast<double>(g);
    return loss / static_cast<double>(eval.size());
  }
};

double gsl_objective(const gsl_vector* v, void* params) {
  const auto* prob = static_cast<const CvProblem*>(params);
  const auto m = prob->x_log->cols();
  Eigen::VectorXd bw_x(m);
  for (Eigen::Index j = 0; j < m; ++j) bw_x[j] = std::exp(gsl_vector_get(v, static_cast<std::size_t>(j)));
  const double bw_y = std::exp(gsl_vector_get(v, static_cast<std::size_t>(m)));
  const double f = prob->objective(bw_x, bw_y);
  return std::isfinite(f) ? f : GSL_POSINF;
}

}  // namespace

double kcde_cv_objective(const Eigen::MatrixXd& x_log, const Eigen::VectorXd& y_log,
                         const Eigen::VectorXd& bw_x, double bw_y, const KcdeOptions& options) {
  const CvProblem prob(x_log, y_log, options);
  return prob.objective(bw_x, bw_y);
}

KcdeModel kcde_fit(const Dataset& data, const KcdeOptions& options) {
  data.validate();
  if (data.size() < 50) throw DomainError("kcde_fit: need at least 50 samples");
  if (options.folds < 2) throw DomainError("kcde_fit: folds must be at least 2");
  KcdeModel model;
  model.train_x_log = data.inputs.array().log().matrix();
  model.train_y_log = data.outputs.array().log().matrix();
  Eigen::VectorXd bw0;
  double bwy0 = 0.0;
  kcde_rule_of_thumb(model.train_x_log, model.train_y_log, bw0, bwy0);

  Eigen::MatrixXd cv_x;
  Eigen::VectorXd cv_y;
  double rescale = 1.0;
  if (data.size() > options.max_cv_train) {
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(options.seed, Stream::subsample, 0x6b6364));
    for (std::size_t i = 0; i < options.max_cv_train; ++i)
      std::swap(perm[i], perm[i + rng.index(perm.size() - i)]);
    perm.resize(options.max_cv_train);
    const Dataset sub = data.subset(perm);
    cv_x = sub.inputs.array().log().matrix();
    cv_y = sub.outputs.array().log().matrix();
    const double d = static_cast<double>(data.dims() + 1);
    rescale = std::pow(static_cast<double>(options.max_cv_train) / static_cast<double>(data.size()),
                       1.0 / (4.0 + d));
    kcde_rule_of_thumb(cv_x, cv_y, bw0, bwy0);
  } else {
    cv_x = model.train_x_log;
    cv_y = model.train_y_log;
  }
  const CvProblem prob(cv_x, cv_y, options);
  const auto m = static_cast<std::size_t>(bw0.size());
  gsl_set_error_handler_off();
  gsl_vector* start = gsl_vector_alloc(m + 1);
  gsl_vector* step = gsl_vector_alloc(m + 1);
  for (std::size_t j = 0; j < m; ++j) gsl_vector_set(start, j, std::log(bw0[static_cast<Eigen::Index>(j)]));
  gsl_vector_set(start, m, std::log(bwy0));
  gsl_vector_set_all(step, 0.5);
  gsl_multimin_function fn{&gsl_objective, m + 1, const_cast<CvProblem*>(&prob)};
  gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, m + 1);
  int status = gsl_multimin_fminimizer_set(solver, &fn, start, step);
  for (int it = 0; status == GSL_SUCCESS && it < options.max_iterations; ++it) {
    status = gsl_multimin_fminimizer_iterate(solver);
    if (status != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-3) == GSL_SUCCESS) break;
  }
  const bool ok = status == GSL_SUCCESS && std::isfinite(solver->fval);
  Eigen::VectorXd log_bw(m + 1);
  for (std::size_t j = 0; j <= m; ++j) log_bw[static_cast<Eigen::Index>(j)] = gsl_vector_get(solver->x, j);
  gsl_multimin_fminimizer_free(solver);
  gsl_vector_free(step);
  gsl_vector_free(start);

  if (ok && log_bw.allFinite()) {
    model.bw_x.resize(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      model.bw_x[k] = rescale * std::clamp(std::exp(log_bw[k]), 1e-4 * bw0[k], 1e4 * bw0[k]);
    }
    model.bw_y =
        rescale * std::clamp(std::exp(log_bw[static_cast<Eigen::Index>(m)]), 1e-4 * bwy0, 1e4 * bwy0);
  } else {
    model.bw_x = rescale * bw0;
    model.bw_y = rescale * bwy0;
    model.warning = "kcde_fit: bandwidth search failed; using rule-of-thumb bandwidths";
  }
  return model;
}

double kcde_conditional_cdf(const KcdeModel& m, const Eigen::VectorXd& x, double y) {
  if (!(y > 0.0)) throw DomainError("kcde_conditional_cdf: y must be positive");
  const Eigen::VectorXd w = m.weights(x);
  const double ly = std::log(y);
  double f = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w[j] > 0.0) f += w[j] * normal_cdf((ly - m.train_y_log[j]) / m.bw_y);
  return std::clamp(f, 0.0, 1.0);
}

double kcde_fragility(const KcdeModel& m, const Eigen::VectorXd& x, double delta0) {
  if (!(delta0 > 0.0)) throw DomainError("kcde_fragility: delta0 must be positive");
  return 1.0 - kcde_conditional_cdf(m, x, delta0);
}

std::vector<double> kcde_sample_conditional(const KcdeModel& m, const Eigen::VectorXd& x,
                                            std::size_t n, Rng& rng) {
  const Eigen::VectorXd w = m.weights(x);
  std::vector<double> cum(static_cast<std::size_t>(w.size()));
  std::partial_sum(w.data(), w.data() + w.size(), cum.begin());
  std::vector<double> out(n);
  for (auto& v : out) {
    const double u = rng.uniform() * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto j = static_cast<Eigen::Index>(std::min<std::ptrdiff_t>(it - cum.begin(), w.size() - 1));
    v = std::exp(m.train_y_log[j] + m.bw_y * rng.normal());
  }
  return out;
}

}  // namespace seisfrag::baselines
