#include "seisfrag/spce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <ceres/ceres.h>

#include "seisfrag/common.hpp"
#include "seisfrag/parallel.hpp"

namespace seisfrag::spce {

using transforms::MultiIndex;
using transforms::TruncationSet;

void Dataset::validate() const {
  if (outputs.size() < 1) throw DomainError("Dataset: need at least one sample");
  if (inputs.rows() != outputs.size()) throw DomainError("Dataset: inputs/outputs size mismatch");
  if ((outputs.array() <= 0.0).any()) throw DomainError("Dataset: outputs must be positive");
  if (!inputs.allFinite() || !outputs.allFinite()) throw DomainError("Dataset: non-finite values");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.outputs.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(r);
    out.outputs[static_cast<Eigen::Index>(i)] = outputs[r];
  }
  return out;
}

namespace {

int latent_degree(const MultiIndex& a) { return a.back(); }

bool is_pure_latent_linear(const MultiIndex& a) {
  for (std::size_t j = 0; j + 1 < a.size(); ++j)
    if (a[j] != 0) return false;
  return a.back() == 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

SpceModel::SpceModel(TruncationSet truncation, Eigen::VectorXd coeffs, double sigma,
                     transforms::InputTransform transform, std::size_t nq)
    : truncation_(std::move(truncation)),
      coeffs_(std::move(coeffs)),
      sigma_(sigma),
      transform_(std::move(transform)),
      rule_(gauss_hermite(nq)) {
  if (truncation_.size() == 0) throw DomainError("SpceModel: empty truncation set");
  if (static_cast<std::size_t>(coeffs_.size()) != truncation_.size())
    throw DomainError("SpceModel: one coefficient per basis function is required");
  if (truncation_.dims() != transform_.dims() + 1)
    throw DomainError("SpceModel: truncation must have one latent dimension");
  if (!(sigma_ > 0.0)) throw DomainError("SpceModel: sigma must be positive");
  if (!coeffs_.allFinite()) throw DomainError("SpceModel: non-finite coefficients");
  for (const auto& a : truncation_.indices) max_latent_degree_ = std::max(max_latent_degree_, a.back());
}

Eigen::VectorXd SpceModel::latent_polynomial(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd h = transform_.to_standard(x);
  const auto m = static_cast<std::size_t>(h.size());
  const int p = truncation_.max_degree;
  std::vector<double> phi((m) * static_cast<std::size_t>(p + 1));
  for (std::size_t j = 0; j < m; ++j)
    transforms::hermite_all(p, h[static_cast<Eigen::Index>(j)], &phi[j * static_cast<std::size_t>(p + 1)]);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(max_latent_degree_ + 1);
  for (std::size_t t = 0; t < truncation_.size(); ++t) {
    const MultiIndex& a = truncation_.indices[t];
    double psi = 1.0;
    for (std::size_t j = 0; j < m; ++j) psi *= phi[j * static_cast<std::size_t>(p + 1) + static_cast<std::size_t>(a[j])];
    b[a.back()] += coeffs_[static_cast<Eigen::Index>(t)] * psi;
  }
  return b;
}

namespace {

double eval_latent(const Eigen::VectorXd& b, double z, std::vector<double>& scratch) {
  const int d = static_cast<int>(b.size()) - 1;
  scratch.resize(static_cast<std::size_t>(d + 1));
  transforms::hermite_all(d, z, scratch.data());
  double m = 0.0;
  for (int k = 0; k <= d; ++k) m += b[k] * scratch[static_cast<std::size_t>(k)];
  return m;
}

}  // namespace

double SpceModel::mean_function(const Eigen::VectorXd& x, double z) const {
  std::vector<double> scratch;
  return eval_latent(latent_polynomial(x), z, scratch);
}

void SpceModel::canonicalize_sign() {
  Eigen::Index best = -1;
  for (std::size_t t = 0; t < truncation_.size(); ++t) {
    if (truncation_.indices[t].back() != 1) continue;
    const auto i = static_cast<Eigen::Index>(t);
    if (best < 0 || std::abs(coeffs_[i]) > std::abs(coeffs_[best])) best = i;
  }
  if (best < 0 || coeffs_[best] >= 0.0) return;
  for (std::size_t t = 0; t < truncation_.size(); ++t)
    if (truncation_.indices[t].back() % 2 == 1) coeffs_[static_cast<Eigen::Index>(t)] *= -1.0;
}

// ---------------------------------------------------------------------------
// Likelihood

Eigen::MatrixXd input_basis(const TruncationSet& trunc, const Eigen::MatrixXd& h) {
  const auto n = h.rows();
  const auto m = static_cast<std::size_t>(h.cols());
  if (trunc.dims() != m + 1) throw DomainError("input_basis: truncation/input dimension mismatch");
  const int p = trunc.max_degree;
  const auto stride = static_cast<std::size_t>(p + 1);
  Eigen::MatrixXd table(n, static_cast<Eigen::Index>(trunc.size()));
  std::vector<double> phi(m * stride);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      transforms::hermite_all(p, h(i, static_cast<Eigen::Index>(j)), &phi[j * stride]);
    for (std::size_t t = 0; t < trunc.size(); ++t) {
      const MultiIndex& a = trunc.indices[t];
      double psi = 1.0;
      for (std::size_t j = 0; j < m; ++j) psi *= phi[j * stride + static_cast<std::size_t>(a[j])];
      table(i, static_cast<Eigen::Index>(t)) = psi;
    }
  }
  return table;
}

QuadratureLikelihood::QuadratureLikelihood(const TruncationSet& trunc, const Eigen::MatrixXd& h,
                                           const Eigen::VectorXd& log_y,
                                           const GaussHermiteRule& rule)
    : basis_x_(input_basis(trunc, h)), log_y_(log_y) {
  if (h.rows() != log_y.size()) throw DomainError("QuadratureLikelihood: size mismatch");
  const auto nq = static_cast<Eigen::Index>(rule.size());
  const auto p = static_cast<Eigen::Index>(trunc.size());
  basis_z_.resize(nq, p);
  log_w_.resize(nq);
  int max_d = 0;
  for (const auto& a : trunc.indices) max_d = std::max(max_d, a.back());
  std::vector<double> phi(static_cast<std::size_t>(max_d + 1));
  for (Eigen::Index j = 0; j < nq; ++j) {
    transforms::hermite_all(max_d, rule.nodes[static_cast<std::size_t>(j)], phi.data());
    for (Eigen::Index t = 0; t < p; ++t)
      basis_z_(j, t) = phi[static_cast<std::size_t>(trunc.indices[static_cast<std::size_t>(t)].back())];
    log_w_[j] = std::log(rule.weights[static_cast<std::size_t>(j)]);
  }
  sum_log_y_ = log_y_.sum();
}

double QuadratureLikelihood::evaluate(const Eigen::VectorXd& c, double sigma,
                                      Eigen::VectorXd* grad_c, double* grad_sigma) const {
  if (!(sigma > 0.0)) throw DomainError("log_likelihood: sigma must be positive");
  const auto n = log_y_.size();
  const double inv_var = 1.0 / (sigma * sigma);
  // m_ij = sum_a Psi_x(i, a) c_a Psi_z(j, a)
  const Eigen::MatrixXd means = (basis_x_ * c.asDiagonal()) * basis_z_.transpose();
  Eigen::MatrixXd resid = (-means).colwise() + log_y_;
  Eigen::MatrixXd expo = (-0.5 * inv_var) * resid.array().square().matrix();
  expo.rowwise() += log_w_.transpose();

  const Eigen::VectorXd row_max = expo.rowwise().maxCoeff();
  Eigen::MatrixXd resp = (expo.colwise() - row_max).array().exp().matrix();
  const Eigen::VectorXd row_sum = resp.rowwise().sum();
  const Eigen::VectorXd lse = row_max.array() + row_sum.array().log();

  const double ll = lse.sum() - static_cast<double>(n) * std::log(std::sqrt(2.0 * kPi) * sigma) -
                    sum_log_y_;
  if (grad_c || grad_sigma) resp = row_sum.cwiseInverse().asDiagonal() * resp;
  if (grad_c) {
    const Eigen::MatrixXd g = inv_var * resp.cwiseProduct(resid);
    const Eigen::MatrixXd t = basis_x_.transpose() * g;  // P x NQ
    *grad_c = t.cwiseProduct(basis_z_.transpose()).rowwise().sum();
  }
  if (grad_sigma) {
    const double weighted = resp.cwiseProduct(resid.cwiseAbs2()).sum();
    *grad_sigma = -static_cast<double>(n) / sigma + weighted * inv_var / sigma;
  }
  return ll;
}

double log_likelihood(const Eigen::VectorXd& c, double sigma, const Dataset& data,
                      const TruncationSet& trunc, const transforms::InputTransform& transform,
                      std::size_t nq) {
  data.validate();
  const QuadratureLikelihood lik(trunc, transform.to_standard_rows(data.inputs),
                                 data.outputs.array().log().matrix(), gauss_hermite(nq));
  return lik.evaluate(c, sigma);
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

class NegativeMeanLogLikelihood final : public ceres::FirstOrderFunction {
 public:
  NegativeMeanLogLikelihood(const QuadratureLikelihood& lik, double sigma)
      : lik_(lik), sigma_(sigma), scale_(1.0 / static_cast<double>(lik.samples())) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> c(parameters, NumParameters());
    Eigen::VectorXd g;
    const double ll = lik_.evaluate(c, sigma_, gradient ? &g : nullptr);
    if (!std::isfinite(ll)) return false;
    *cost = -scale_ * ll;
    if (gradient) Eigen::Map<Eigen::VectorXd>(gradient, NumParameters()) = -scale_ * g;
    return true;
  }
  int NumParameters() const override { return static_cast<int>(lik_.terms()); }

 private:
  const QuadratureLikelihood& lik_;
  double sigma_;
  double scale_;
};

struct OlsResult {
  Eigen::VectorXd coeffs;  // full-length, zeros on z-coupled terms
  double residual_std = 0.0;
};

OlsResult ols_on_input_terms(const TruncationSet& trunc, const Eigen::MatrixXd& basis_x,
                             const Eigen::VectorXd& log_y) {
  std::vector<Eigen::Index> cols;
  for (std::size_t t = 0; t < trunc.size(); ++t)
    if (latent_degree(trunc.indices[t]) == 0) cols.push_back(static_cast<Eigen::Index>(t));
  Eigen::MatrixXd design(basis_x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) design.col(static_cast<Eigen::Index>(k)) = basis_x.col(cols[k]);
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(log_y);
  OlsResult out;
  out.coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(trunc.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.coeffs[cols[k]] = beta[static_cast<Eigen::Index>(k)];
  const Eigen::VectorXd resid = log_y - design * beta;
  out.residual_std = std::sqrt(resid.squaredNorm() / static_cast<double>(log_y.size()));
  return out;
}

// Lower bound keeping the sigma grid strictly positive for noiseless data.
double residual_floor(const Eigen::VectorXd& log_y) {
  const double mean = log_y.mean();
  const double sd = std::sqrt((log_y.array() - mean).square().mean());
  return 1e-6 * std::max(1.0, sd);
}

}  // namespace

Eigen::VectorXd fit_coefficients(const QuadratureLikelihood& lik, const TruncationSet& trunc,
                                 const Eigen::VectorXd& log_y, double sigma, int restarts,
                                 std::uint64_t seed, int max_iterations) {
  const OlsResult ols = ols_on_input_terms(trunc, lik.basis_x(), log_y);
  const double s = std::max(ols.residual_std, residual_floor(log_y));
  const double latent_scale = std::sqrt(std::max(s * s - sigma * sigma, 0.01 * s * s));

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = max_iterations;
  options.function_tolerance = 1e-13;
  options.gradient_tolerance = 1e-11;
  options.parameter_tolerance = 1e-13;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;

  static constexpr double kLatentStart[] = {1.0, 0.5, 1.5};
  Eigen::VectorXd best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Eigen::VectorXd c = ols.coeffs;
    const double jitter = (r == 0 ? 0.01 : 0.05) * s;
    for (std::size_t t = 0; t < trunc.size(); ++t) {
      const MultiIndex& a = trunc.indices[t];
      if (latent_degree(a) == 0) continue;
      const auto i = static_cast<Eigen::Index>(t);
      c[i] = is_pure_latent_linear(a) ? kLatentStart[r % 3] * latent_scale : jitter * rng.normal();
    }
    ceres::GradientProblem problem(new NegativeMeanLogLikelihood(lik, sigma));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, c.data(), &summary);
    if (!c.allFinite()) continue;
    const double ll = lik.evaluate(c, sigma);
    if (std::isfinite(ll) && ll > best_ll) {
      best_ll = ll;
      best = c;
    }
  }
  if (best.size() == 0) {
    std::ostringstream msg;
    msg << "spce: optimizer failed on all " << restarts << " restarts (sigma = " << sigma << ")";
    throw FitError(msg.str());
  }
  return best;
}

std::vector<double> FitConfig::default_sigma_grid() {
  std::vector<double> g(8);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = 0.1 * std::pow(12.0, static_cast<double>(i) / 7.0);
  return g;
}

void FitConfig::validate() const {
  if (nq < 2) throw DomainError("FitConfig: nq must be at least 2");
  if (folds < 2) throw DomainError("FitConfig: folds must be at least 2");
  if (!fixed_truncation && (degree_grid.empty() || q_grid.empty()))
    throw DomainError("FitConfig: empty truncation grid");
  if (max_nq < nq) throw DomainError("FitConfig: max_nq must be at least nq");
  if (!(nq_tolerance > 0.0)) throw DomainError("FitConfig: nq_tolerance must be positive");
  if (sigma_grid.empty()) throw DomainError("FitConfig: empty sigma grid");
  for (double f : sigma_grid)
    if (!(f > 0.0)) throw DomainError("FitConfig: sigma grid entries must be positive");
}

SpceModel fit(const Dataset& data, const FitConfig& cfg, FitReport* report) {
  data.validate();
  cfg.validate();
  const transforms::InputTransform transform =
      cfg.transform ? *cfg.transform : transforms::InputTransform::fit_lognormal(data.inputs);
  if (transform.dims() != data.dims()) throw DomainError("spce::fit: transform dimension mismatch");

  const Eigen::MatrixXd h = transform.to_standard_rows(data.inputs);
  const Eigen::VectorXd log_y = data.outputs.array().log().matrix();
  const GaussHermiteRule rule = gauss_hermite(cfg.nq);
  const std::size_t n = data.size();
  const std::size_t dims = data.dims() + 1;

  // Candidate truncations (duplicates across q collapse to one).
  struct Candidate {
    TruncationSet trunc;
    double scale = 0.0;
  };
  std::vector<Candidate> cands;
  const std::size_t min_train = n - (n + cfg.folds - 1) / cfg.folds;
  auto add = [&](TruncationSet t) {
    for (const auto& c : cands)
      if (c.trunc.indices == t.indices) return;
    if (t.size() > min_train) return;
    cands.push_back({std::move(t), 0.0});
  };
  if (cfg.fixed_truncation) {
    add(*cfg.fixed_truncation);
  } else {
    for (int p : cfg.degree_grid)
      for (double q : cfg.q_grid) add(transforms::build_truncation(dims, p, q));
  }
  if (cands.empty()) throw FitError("spce::fit: no truncation candidate fits the sample size");
  for (auto& c : cands) {
    const Eigen::MatrixXd bx = input_basis(c.trunc, h);
    c.scale = std::max(ols_on_input_terms(c.trunc, bx, log_y).residual_std, residual_floor(log_y));
  }

  // Fold assignment from a seeded permutation.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  {
    Rng rng(derive_seed(cfg.seed, Stream::fit, 0xf01d));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  }
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[perm[k]] = k % cfg.folds;

  const std::size_t n_sigma = cfg.sigma_grid.size();
  const std::size_t n_tasks = cands.size() * cfg.folds;
  std::vector<std::vector<double>> heldout(n_tasks, std::vector<double>(n_sigma, 0.0));
  std::vector<std::vector<bool>> ok(n_tasks, std::vector<bool>(n_sigma, false));

  parallel_for(n_tasks, cfg.threads, [&](std::size_t task) {
    const std::size_t ci = task / cfg.folds, fold = task % cfg.folds;
    const Candidate& cand = cands[ci];
    std::vector<Eigen::Index> tr, te;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == fold ? te : tr).push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd h_tr = h(tr, Eigen::all), h_te = h(te, Eigen::all);
    const Eigen::VectorXd y_tr = log_y(tr), y_te = log_y(te);
    const QuadratureLikelihood lik_tr(cand.trunc, h_tr, y_tr, rule);
    const QuadratureLikelihood lik_te(cand.trunc, h_te, y_te, rule);
    for (std::size_t si = 0; si < n_sigma; ++si) {
      const double sigma = cfg.sigma_grid[si] * cand.scale;
      try {
        const Eigen::VectorXd c =
            fit_coefficients(lik_tr, cand.trunc, y_tr, sigma, cfg.cv_restarts,
                             derive_seed(cfg.seed, Stream::fit, task + 1, si), cfg.max_iterations);
        const double ll = lik_te.evaluate(c, sigma);
        if (std::isfinite(ll)) {
          heldout[task][si] = ll;
          ok[task][si] = true;
        }
      } catch (const FitError&) {
      }
    }
  });

  FitReport local;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_c = 0, best_s = 0;
  for (std::size_t ci = 0; ci < cands.size(); ++ci) {
    for (std::size_t si = 0; si < n_sigma; ++si) {
      double total = 0.0;
      bool valid = true;
      for (std::size_t f = 0; f < cfg.folds; ++f) {
        valid = valid && ok[ci * cfg.folds + f][si];
        total += heldout[ci * cfg.folds + f][si];
      }
      const double score = valid ? total / static_cast<double>(n)
                                 : -std::numeric_limits<double>::infinity();
      local.candidates.push_back({cands[ci].trunc.max_degree, cands[ci].trunc.q_norm,
                                  cfg.sigma_grid[si] * cands[ci].scale, score});
      if (score > best_score) {
        best_score = score;
        best_c = ci;
        best_s = si;
        local.selected = local.candidates.size() - 1;
      }
    }
  }
  if (!std::isfinite(best_score)) throw FitError("spce::fit: every cross-validation candidate failed");

  const Candidate& cand = cands[best_c];
  const double sigma = cfg.sigma_grid[best_s] * cand.scale;
  std::size_t nq = cfg.nq;
  Eigen::VectorXd c;
  for (;;) {
    const QuadratureLikelihood lik(cand.trunc, h, log_y, gauss_hermite(nq));
    c = fit_coefficients(lik, cand.trunc, log_y, sigma, cfg.restarts,
                         derive_seed(cfg.seed, Stream::fit, 0, 0xa11), cfg.max_iterations);
    if (2 * nq > cfg.max_nq) break;
    const double ll = lik.evaluate(c, sigma);
    const double ll_fine = QuadratureLikelihood(cand.trunc, h, log_y, gauss_hermite(2 * nq)).evaluate(c, sigma);
    if (std::abs(ll - ll_fine) <= cfg.nq_tolerance * std::abs(ll)) break;
    nq *= 2;
  }
  SpceModel model(cand.trunc, c, sigma, transform, nq);
  model.canonicalize_sign();
  model.meta.n_train = n;
  model.meta.cv_score = best_score;
  model.meta.seed = cfg.seed;
  local.residual_std = cand.scale;
  local.nq = nq;
  if (report) *report = std::move(local);
  return model;
}

// ---------------------------------------------------------------------------
// Prediction

double conditional_cdf(const SpceModel& model, const Eigen::VectorXd& x, double y) {
  if (!(y > 0.0)) throw DomainError("conditional_cdf: y must be positive");
  const Eigen::VectorXd b = model.latent_polynomial(x);
  const GaussHermiteRule& rule = model.rule();
  const double ly = std::log(y);
  std::vector<double> scratch;
  double f = 0.0;
  for (std::size_t j = 0; j < rule.size(); ++j)
    f += rule.weights[j] * normal_cdf((ly - eval_latent(b, rule.nodes[j], scratch)) / model.sigma());
  return std::clamp(f, 0.0, 1.0);
}

std::vector<double> sample_conditional(const SpceModel& model, const Eigen::VectorXd& x,
                                       std::size_t n, Rng& rng) {
  if (n < 1) throw DomainError("sample_conditional: n must be at least 1");
  const Eigen::VectorXd b = model.latent_polynomial(x);
  std::vector<double> scratch, out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.normal();
    const double eps = rng.normal();
    out[i] = std::exp(eval_latent(b, z, scratch) + model.sigma() * eps);
  }
  return out;
}

double fragility(const SpceModel& model, const Eigen::VectorXd& x, double delta0) {
  if (!(delta0 > 0.0)) throw DomainError("fragility: delta0 must be positive");
  return 1.0 - conditional_cdf(model, x, delta0);
}

std::vector<double> sample_unconditional(const SpceModel& model, const gm::ParamsJointModel& joint,
                                         std::size_t n, Rng& rng) {
  if (n < 1) throw DomainError("sample_unconditional: n must be at least 1");
  if (model.input_dims() != 4) throw DomainError("sample_unconditional: model must take 4 inputs");
  std::vector<double> out(n);
  Eigen::Vector4d u;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) u[j] = rng.normal();
    const auto x = joint.from_standard_normal(u).random_part();
    out[i] = sample_conditional(model, Eigen::Map<const Eigen::Vector4d>(x.data()), 1, rng)[0];
  }
  return out;
}

namespace {

// Gaussian conditional of (ln t_mid, ln d595) given (ln ia, ln omega_g).
struct NuisanceConditional {
  Eigen::Matrix2d gain;      // Sigma_ho Sigma_oo^-1
  Eigen::Vector2d mean_h;
  Eigen::Vector2d mean_o;
  Eigen::Matrix2d chol;      // of the conditional covariance

  explicit NuisanceConditional(const gm::ParamsJointModel& joint) {
    const Eigen::Vector4d sd = joint.log_stds();
    const Eigen::Matrix4d cov = sd.asDiagonal() * joint.correlation() * sd.asDiagonal();
    const int o[2] = {0, 3}, hid[2] = {1, 2};
    Eigen::Matrix2d s_oo, s_ho, s_hh;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        s_oo(a, b) = cov(o[a], o[b]);
        s_ho(a, b) = cov(hid[a], o[b]);
        s_hh(a, b) = cov(hid[a], hid[b]);
      }
    gain = s_ho * s_oo.inverse();
    const Eigen::Matrix2d cond = s_hh - gain * s_ho.transpose();
    chol = Eigen::LLT<Eigen::Matrix2d>(cond).matrixL();
    mean_h << joint.log_means()[1], joint.log_means()[2];
    mean_o << joint.log_means()[0], joint.log_means()[3];
  }

  Eigen::Vector2d mean(double ia, double omega_g) const {
    return mean_h + gain * (Eigen::Vector2d(std::log(ia), std::log(omega_g)) - mean_o);
  }
};

}  // namespace

std::vector<gm::GroundMotionParams> sample_nuisance(const gm::ParamsJointModel& joint, double ia,
                                                    double omega_g, std::size_t n, Rng& rng) {
  if (!(ia > 0.0 && omega_g > 0.0)) throw DomainError("sample_nuisance: ia, omega_g must be positive");
  const NuisanceConditional cond(joint);
  const Eigen::Vector2d mu = cond.mean(ia, omega_g);
  std::vector<gm::GroundMotionParams> out(n);
  for (auto& x : out) {
    Eigen::Vector2d u(rng.normal(), rng.normal());
    const Eigen::Vector2d l = mu + cond.chol * u;
    x = {ia, std::exp(l[0]), std::exp(l[1]), omega_g, gm::kDefaultZetaG};
  }
  return out;
}

Eigen::MatrixXd averaged_fragility_surface(const SpceModel& model,
                                           const gm::ParamsJointModel& joint,
                                           const std::vector<double>& ia_grid,
                                           const std::vector<double>& omega_grid, double delta0,
                                           std::size_t n_nuisance, Rng& rng) {
  if (ia_grid.empty() || omega_grid.empty()) throw DomainError("averaged_fragility_surface: empty grid");
  if (n_nuisance < 1) throw DomainError("averaged_fragility_surface: n_nuisance must be at least 1");
  const NuisanceConditional cond(joint);
  std::vector<Eigen::Vector2d> draws(n_nuisance);
  for (auto& u : draws) u = Eigen::Vector2d(rng.normal(), rng.normal());

  Eigen::MatrixXd surface(static_cast<Eigen::Index>(ia_grid.size()),
                          static_cast<Eigen::Index>(omega_grid.size()));
  for (std::size_t a = 0; a < ia_grid.size(); ++a) {
    for (std::size_t w = 0; w < omega_grid.size(); ++w) {
      const Eigen::Vector2d mu = cond.mean(ia_grid[a], omega_grid[w]);
      double sum = 0.0;
      for (const auto& u : draws) {
        const Eigen::Vector2d l = mu + cond.chol * u;
        const Eigen::Vector4d x(ia_grid[a], std::exp(l[0]), std::exp(l[1]), omega_grid[w]);
        sum += fragility(model, x, delta0);
      }
      surface(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(w)) =
          sum / static_cast<double>(n_nuisance);
    }
  }
  return surface;
}

}  // namespace seisfrag::spce
