#include "seisfrag/gm_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/FFT>

#include "seisfrag/common.hpp"

namespace seisfrag::gm {

void GroundMotionParams::validate() const {
  if (!(ia > 0.0 && t_mid > 0.0 && d595 > 0.0 && omega_g > 0.0))
    throw DomainError("GroundMotionParams: ia, t_mid, d595 and omega_g must be positive");
  if (!(zeta_g > 0.0 && zeta_g <= 1.0))
    throw DomainError("GroundMotionParams: zeta_g must lie in (0, 1]");
}

GroundMotionParams GroundMotionParams::from_random_part(std::span<const double> x,
                                                        double zeta_g) {
  if (x.size() != 4) throw DomainError("GroundMotionParams: expected 4 components");
  return {x[0], x[1], x[2], x[3], zeta_g};
}

ParamsJointModel::ParamsJointModel(Eigen::Vector4d log_means, Eigen::Vector4d log_stds,
                                   Eigen::Matrix4d correlation)
    : log_means_(std::move(log_means)),
      log_stds_(std::move(log_stds)),
      correlation_(std::move(correlation)) {
  if ((log_stds_.array() <= 0.0).any())
    throw DomainError("ParamsJointModel: log standard deviations must be positive");
  if (!correlation_.isApprox(correlation_.transpose(), 1e-14) ||
      (correlation_.diagonal().array() - 1.0).abs().maxCoeff() > 1e-14)
    throw DomainError("ParamsJointModel: correlation must be symmetric with unit diagonal");
  Eigen::LLT<Eigen::Matrix4d> llt(correlation_);
  if (llt.info() != Eigen::Success)
    throw DomainError("ParamsJointModel: correlation matrix is not positive definite");
  cholesky_ = llt.matrixL();
}

ParamsJointModel ParamsJointModel::table1() {
  Eigen::Vector4d mu(-4.61, 2.55, 2.67, 1.42);
  Eigen::Vector4d sigma(1.45, 0.90, 0.53, 0.59);
  Eigen::Matrix4d r;
  // clang-format off
  r <<  1.0,   0.015, -0.23, -0.13,
        0.015, 1.0,    0.68, -0.36,
       -0.23,  0.68,   1.0,  -0.11,
       -0.13, -0.36,  -0.11,  1.0;
  // clang-format on
  return {mu, sigma, r};
}

GroundMotionParams ParamsJointModel::from_standard_normal(const Eigen::Vector4d& u) const {
  const Eigen::Vector4d log_x = log_means_ + log_stds_.cwiseProduct(cholesky_ * u);
  return {std::exp(log_x[0]), std::exp(log_x[1]), std::exp(log_x[2]), std::exp(log_x[3]),
          kDefaultZetaG};
}

std::vector<GroundMotionParams> sample_params(const ParamsJointModel& joint, std::size_t n,
                                              Rng& rng) {
  if (n < 1) throw DomainError("sample_params: n must be at least 1");
  std::vector<GroundMotionParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector4d u;
    for (int j = 0; j < 4; ++j) u[j] = rng.normal();
    out.push_back(joint.from_standard_normal(u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modulating function

double ModulatingParams::value(double t) const {
  if (t <= 0.0) return alpha2 == 1.0 ? std::exp(log_scale()) : 0.0;  // singular at 0 when alpha2 < 1
  return std::exp(log_scale() + (alpha2 - 1.0) * std::log(t) - alpha3 * t);
}

double ModulatingParams::energy_fraction(double t) const {
  if (t <= 0.0) return 0.0;
  return boost::math::gamma_p(gamma_shape(), gamma_rate() * t);
}

double ModulatingParams::energy_quantile(double p) const {
  return boost::math::gamma_p_inv(gamma_shape(), p) / gamma_rate();
}

double ModulatingParams::total_energy() const {
  const double k = gamma_shape();
  return std::exp(2.0 * log_scale() + std::lgamma(k) - k * std::log(gamma_rate()));
}

namespace {

// t_mid / d595 for a unit-rate gamma law of shape k; depends on k only.
double quantile_ratio(double k) {
  const double q05 = boost::math::gamma_p_inv(k, 0.05);
  const double q45 = boost::math::gamma_p_inv(k, 0.45);
  const double q95 = boost::math::gamma_p_inv(k, 0.95);
  return q45 / (q95 - q05);
}

}  // namespace

ModulatingParams fit_modulating(double ia, double t_mid, double d595) {
  if (!(ia > 0.0 && t_mid > 0.0 && d595 > 0.0))
    throw DomainError("fit_modulating: ia, t_mid and d595 must be positive");
  const double target = t_mid / d595;

  double lo = std::log(0.02), hi = std::log(1e6);
  auto residual = [&](double log_k) { return std::log(quantile_ratio(std::exp(log_k))) - std::log(target); };
  const double f_lo = residual(lo), f_hi = residual(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    std::ostringstream msg;
    msg << "fit_modulating: t_mid/d595 = " << target << " outside attainable range (residuals "
        << f_lo << ", " << f_hi << ")";
    throw FitError(msg.str());
  }
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      residual, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  const double k = std::exp(0.5 * (bracket.first + bracket.second));

  const double q45 = boost::math::gamma_p_inv(k, 0.45);
  const double rate = q45 / t_mid;
  ModulatingParams m;
  m.alpha2 = 0.5 * (k + 1.0);
  m.alpha3 = 0.5 * rate;
  // int q^2 dt = alpha1^2 Gamma(k) / rate^k
  m.log_alpha1 = 0.5 * (std::log(ia) + k * std::log(rate) - std::lgamma(k));
  m.alpha1 = std::exp(m.log_alpha1);

  const double t_mid_fit = m.energy_quantile(0.45);
  const double d595_fit = m.energy_quantile(0.95) - m.energy_quantile(0.05);
  const double r1 = std::abs(t_mid_fit / t_mid - 1.0), r2 = std::abs(d595_fit / d595 - 1.0);
  if (max_iter >= 200 || r1 > 1e-9 || r2 > 1e-9) {
    std::ostringstream msg;
    msg << "fit_modulating: root-find did not converge (relative residuals t_mid " << r1
        << ", d595 " << r2 << ")";
    throw FitError(msg.str());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Spectra

double kt_shape(double omega, double omega_g, double zeta_g) {
  if (!(omega_g > 0.0)) throw DomainError("kt_shape: omega_g must be positive");
  if (omega < 0.0) throw DomainError("kt_shape: omega must be non-negative");
  const double wg2 = omega_g * omega_g, w2 = omega * omega;
  const double cross = 4.0 * zeta_g * zeta_g * wg2 * w2;
  return (wg2 * wg2 + cross) / ((w2 - wg2) * (w2 - wg2) + cross);
}

double highpass_gain(double omega, double omega_cut, double zeta_hp) {
  const double w2 = omega * omega, wc2 = omega_cut * omega_cut;
  const double d = 2.0 * zeta_hp * omega_cut * omega;
  return w2 * w2 / ((wc2 - w2) * (wc2 - w2) + d * d);
}

FrequencyGrid FrequencyGrid::nyquist(double dt, std::size_t count) {
  if (!(dt > 0.0) || count == 0) throw DomainError("FrequencyGrid: need dt > 0 and count > 0");
  return {kPi / (dt * static_cast<double>(count)), count};
}

double kt_psd(double omega, double omega_g, double zeta_g, const FrequencyGrid& grid) {
  double sum = 0.0;
  for (std::size_t k = 1; k <= grid.count; ++k) sum += kt_shape(grid.omega(k), omega_g, zeta_g);
  return kt_shape(omega, omega_g, zeta_g) / (sum * grid.d_omega);
}

DiscreteSpectrum::DiscreteSpectrum(const FrequencyGrid& grid, double omega_g, double zeta_g)
    : grid_(grid), density_(grid.count) {
  double sum = 0.0;
  for (std::size_t k = 1; k <= grid.count; ++k) {
    density_[k - 1] = kt_shape(grid.omega(k), omega_g, zeta_g);
    sum += density_[k - 1];
  }
  for (double& s : density_) s /= sum * grid.d_omega;
}

DiscreteSpectrum::DiscreteSpectrum(const FrequencyGrid& grid, double omega_g, double zeta_g,
                                   double omega_cut, double zeta_hp, bool renormalize)
    : grid_(grid), density_(grid.count) {
  double sum = 0.0, filtered = 0.0;
  for (std::size_t k = 1; k <= grid.count; ++k) {
    const double w = grid.omega(k);
    const double shape = kt_shape(w, omega_g, zeta_g);
    density_[k - 1] = shape * highpass_gain(w, omega_cut, zeta_hp);
    sum += shape;
    filtered += density_[k - 1];
  }
  const double norm = renormalize ? filtered : sum;
  for (double& s : density_) s /= norm * grid.d_omega;
}

double DiscreteSpectrum::total() const {
  double sum = 0.0;
  for (double s : density_) sum += s;
  return sum * grid_.d_omega;
}

// ---------------------------------------------------------------------------
// Synthesis

void SynthesisConfig::validate() const {
  if (!(dt > 0.0 && duration > 0.0 && n_freq >= 1 && omega_cut >= 0.0 && zeta_hp > 0.0))
    throw DomainError("SynthesisConfig: dt, duration, n_freq and zeta_hp must be positive");
  if (!(energy_scale > 0.0)) throw DomainError("SynthesisConfig: energy_scale must be positive");
}

void AccelTimeSeries::validate() const {
  if (!(dt > 0.0)) throw DomainError("AccelTimeSeries: dt must be positive");
  if (values.size() < 2) throw DomainError("AccelTimeSeries: need at least two samples");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("AccelTimeSeries: non-finite sample");
}

SynthesisPlan plan_synthesis(const GroundMotionParams& x, const SynthesisConfig& cfg) {
  x.validate();
  cfg.validate();
  SynthesisPlan plan;
  plan.modulating = fit_modulating(x.ia, x.t_mid, x.d595);
  double duration = cfg.duration;
  if (cfg.extend_duration) duration = std::max(duration, plan.modulating.energy_quantile(0.995));
  plan.samples = static_cast<std::size_t>(std::ceil(duration / cfg.dt - 1e-9)) + 1;
  std::size_t bands = cfg.n_freq;
  while (2 * bands < plan.samples) bands *= 2;
  plan.grid = FrequencyGrid::nyquist(cfg.dt, bands);
  plan.energy_coverage =
      plan.modulating.energy_fraction(cfg.dt * static_cast<double>(plan.samples - 1));
  return plan;
}

std::vector<double> stationary_core(const DiscreteSpectrum& spectrum, std::span<const double> noise,
                                    std::size_t samples, double dt) {
  const FrequencyGrid& grid = spectrum.grid();
  const std::size_t bands = grid.count;
  if (noise.size() != 2 * bands)
    throw DomainError("stationary_core: noise must hold two variables per band");
  const std::size_t period = 2 * bands;
  // The DFT shortcut requires omega_k t_i = 2 pi k i / (2K), i.e. the Nyquist grid.
  if (std::abs(grid.d_omega * dt * static_cast<double>(bands) - kPi) > 1e-9 * kPi)
    throw DomainError("stationary_core: grid must end at the Nyquist frequency of dt");

  std::vector<std::complex<double>> coeffs(period, {0.0, 0.0});
  for (std::size_t k = 1; k <= bands; ++k) {
    const double amp = std::sqrt(spectrum.density(k) * grid.d_omega);
    coeffs[k] = {amp * noise[2 * (k - 1)], -amp * noise[2 * (k - 1) + 1]};
  }
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<std::complex<double>> series;
  fft.inv(series, coeffs);

  std::vector<double> out(samples);
  for (std::size_t i = 0; i < samples; ++i) out[i] = series[i % period].real();
  return out;
}

AccelTimeSeries synthesize(const GroundMotionParams& x, const SynthesisConfig& cfg, Rng& rng) {
  const SynthesisPlan plan = plan_synthesis(x, cfg);
  const DiscreteSpectrum spectrum(plan.grid, x.omega_g, x.zeta_g, cfg.omega_cut, cfg.zeta_hp,
                                  cfg.renormalize_highpass);
  std::vector<double> noise(2 * plan.grid.count);
  for (double& v : noise) v = rng.normal();
  const std::vector<double> core = stationary_core(spectrum, noise, plan.samples, cfg.dt);

  AccelTimeSeries ts;
  ts.dt = cfg.dt;
  ts.values.resize(plan.samples);
  const double scale = std::sqrt(cfg.energy_scale);
  for (std::size_t i = 0; i < plan.samples; ++i)
    ts.values[i] = scale * plan.modulating.value(cfg.dt * static_cast<double>(i)) * core[i];
  ts.energy_coverage = plan.energy_coverage;
  if (plan.energy_coverage < 0.99) {
    std::ostringstream msg;
    msg << "record covers only " << 100.0 * plan.energy_coverage << "% of the modulating energy";
    ts.warning = msg.str();
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Intensity measures

IntensityMeasures compute_ims(const AccelTimeSeries& ts, double period, double damping) {
  if (!(period > 0.0)) throw DomainError("compute_ims: period must be positive");
  if (!(damping > 0.0 && damping < 1.0)) throw DomainError("compute_ims: damping must lie in (0, 1)");
  IntensityMeasures ims;
  const auto& a = ts.values;
  const double dt = ts.dt;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ims.pga = std::max(ims.pga, std::abs(a[i]));
    if (i + 1 < a.size()) ims.arias_integral += 0.5 * dt * (a[i] * a[i] + a[i + 1] * a[i + 1]);
  }

  // Exact recurrence for u'' + 2 zeta w u' + w^2 u = p(t), p piecewise linear.
  const double w = 2.0 * kPi / period;
  const double z = damping;
  const double sq = std::sqrt(1.0 - z * z);
  const double wd = w * sq;
  const double k = w * w;
  const double e = std::exp(-z * w * dt);
  const double s = std::sin(wd * dt), c = std::cos(wd * dt);

  const double A = e * (z / sq * s + c);
  const double B = e * s / wd;
  const double C = (2.0 * z / (w * dt) +
                    e * (((1.0 - 2.0 * z * z) / (wd * dt) - z / sq) * s -
                         (1.0 + 2.0 * z / (w * dt)) * c)) / k;
  const double D = (1.0 - 2.0 * z / (w * dt) +
                    e * ((2.0 * z * z - 1.0) / (wd * dt) * s + 2.0 * z / (w * dt) * c)) / k;
  const double Ap = -e * w / sq * s;
  const double Bp = e * (c - z / sq * s);
  const double Cp = (-1.0 / dt + e * ((w / sq + z / (dt * sq)) * s + c / dt)) / k;
  const double Dp = (1.0 - e * (z / sq * s + c)) / (k * dt);

  double u = 0.0, v = 0.0, umax = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    const double p0 = -a[i], p1 = -a[i + 1];
    const double un = A * u + B * v + C * p0 + D * p1;
    const double vn = Ap * u + Bp * v + Cp * p0 + Dp * p1;
    u = un;
    v = vn;
    umax = std::max(umax, std::abs(u));
  }
  ims.sa = k * umax;
  return ims;
}

}  // namespace seisfrag::gm
