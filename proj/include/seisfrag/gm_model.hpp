#pragma once

#include <array>
#include <cstddef>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seisfrag/random.hpp"

namespace seisfrag::gm {

/// Site-based ground motion parameters (the vector-valued intensity measure).
struct GroundMotionParams {
  double ia = 0.0;       ///< expected Arias-type energy, int E[a^2] dt [g^2 s]
  double t_mid = 0.0;    ///< time at 45% of the expected energy [s]
  double d595 = 0.0;     ///< t95 - t5 [s]
  double omega_g = 0.0;  ///< main frequency [rad/s]
  double zeta_g = 0.9;   ///< bandwidth [-]

  /// Throws DomainError unless all fields are positive and zeta_g <= 1.
  void validate() const;

  /// The four random components (ia, t_mid, d595, omega_g).
  std::array<double, 4> random_part() const { return {ia, t_mid, d595, omega_g}; }
  static GroundMotionParams from_random_part(std::span<const double> x, double zeta_g = 0.9);
};

inline constexpr double kDefaultZetaG = 0.9;

/// Joint lognormal model of (ia, t_mid, d595, omega_g): lognormal marginals
/// tied by a Gaussian copula.
class ParamsJointModel {
 public:
  ParamsJointModel(Eigen::Vector4d log_means, Eigen::Vector4d log_stds,
                   Eigen::Matrix4d correlation);

  /// Site model calibrated on far-field records.
  static ParamsJointModel table1();

  const Eigen::Vector4d& log_means() const { return log_means_; }
  const Eigen::Vector4d& log_stds() const { return log_stds_; }
  const Eigen::Matrix4d& correlation() const { return correlation_; }
  const Eigen::Matrix4d& cholesky() const { return cholesky_; }

  /// exp(mu + sigma o (L u)) for a standard normal 4-vector u.
  GroundMotionParams from_standard_normal(const Eigen::Vector4d& u) const;

 private:
  Eigen::Vector4d log_means_;
  Eigen::Vector4d log_stds_;
  Eigen::Matrix4d correlation_;
  Eigen::Matrix4d cholesky_;
};

std::vector<GroundMotionParams> sample_params(const ParamsJointModel& joint, std::size_t n,
                                              Rng& rng);

/// Gamma modulating function q(t) = alpha1 t^(alpha2-1) exp(-alpha3 t).
/// q^2 is proportional to a gamma density with shape 2 alpha2 - 1 and rate 2 alpha3.
struct ModulatingParams {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;
  /// ln alpha1, kept separately because alpha1 underflows for late, short motions.
  double log_alpha1 = -std::numeric_limits<double>::infinity();

  double log_scale() const { return std::isfinite(log_alpha1) ? log_alpha1 : std::log(alpha1); }

  double gamma_shape() const { return 2.0 * alpha2 - 1.0; }
  double gamma_rate() const { return 2.0 * alpha3; }

  double value(double t) const;
  /// Fraction of the total energy int q^2 reached at time t.
  double energy_fraction(double t) const;
  /// Time at which the energy fraction p is reached.
  double energy_quantile(double p) const;
  /// int_0^inf q^2 dt.
  double total_energy() const;
};

/// Fits the modulating function to (ia, t_mid, d595). Any ratio t_mid / d595 > 0
/// is attainable with alpha2 > 1/2; throws FitError if the root-find fails.
ModulatingParams fit_modulating(double ia, double t_mid, double d595);

/// Unnormalized Kanai-Tajimi shape.
double kt_shape(double omega, double omega_g, double zeta_g);

/// |H(omega)|^2 of the second-order high-pass filter.
double highpass_gain(double omega, double omega_cut, double zeta_hp);

/// Uniform frequency grid omega_k = k d_omega, k = 1..count.
struct FrequencyGrid {
  double d_omega = 0.0;
  std::size_t count = 0;

  double omega(std::size_t k) const { return static_cast<double>(k) * d_omega; }
  double max_omega() const { return omega(count); }
  /// Grid reaching the Nyquist frequency pi / dt with `count` bands.
  static FrequencyGrid nyquist(double dt, std::size_t count);
};

/// Normalized one-sided Kanai-Tajimi density: sum_k S(omega_k) d_omega = 1 on `grid`.
double kt_psd(double omega, double omega_g, double zeta_g, const FrequencyGrid& grid);

/// Tabulated spectrum on a grid, optionally high-pass filtered.
class DiscreteSpectrum {
 public:
  DiscreteSpectrum(const FrequencyGrid& grid, double omega_g, double zeta_g);
  /// High-passed spectrum; without renormalization its variance drops below one.
  DiscreteSpectrum(const FrequencyGrid& grid, double omega_g, double zeta_g, double omega_cut,
                   double zeta_hp, bool renormalize = true);

  const FrequencyGrid& grid() const { return grid_; }
  /// Density at grid point k (1-based, k = 1..count).
  double density(std::size_t k) const { return density_[k - 1]; }
  /// sum_k S_k d_omega.
  double total() const;

 private:
  FrequencyGrid grid_;
  std::vector<double> density_;
};

struct SynthesisConfig {
  double dt = 0.01;                  ///< output step [s]
  double duration = 40.0;            ///< minimum record length [s]
  std::size_t n_freq = 2048;         ///< base number of frequency bands
  double omega_cut = 2.0 * 3.14159265358979323846 * 0.2;  ///< high-pass corner [rad/s]
  double zeta_hp = 1.0;              ///< high-pass damping
  /// Extend the record to the 99.5% energy time of the modulating function.
  bool extend_duration = true;
  /// Expected energy int E[a^2] dt = energy_scale * ia.
  double energy_scale = 1.0;
  /// Rescale the high-passed spectrum back to unit variance.
  bool renormalize_highpass = true;

  void validate() const;
};

struct AccelTimeSeries {
  double dt = 0.0;
  std::vector<double> values;  ///< acceleration [g]
  /// Fraction of the modulating energy covered by the record.
  double energy_coverage = 1.0;
  /// Non-empty when the record misses more than 1% of the modulating energy.
  std::string warning;

  std::size_t size() const { return values.size(); }
  double duration() const { return dt * static_cast<double>(values.size() - 1); }
  void validate() const;
};

/// Frequency grid and sample count actually used for x under cfg. The band
/// count is doubled from cfg.n_freq until the 2 pi / d_omega period of the
/// spectral representation covers the whole record.
struct SynthesisPlan {
  ModulatingParams modulating;
  FrequencyGrid grid;
  std::size_t samples = 0;
  double energy_coverage = 1.0;
};
SynthesisPlan plan_synthesis(const GroundMotionParams& x, const SynthesisConfig& cfg);

/// Unit-variance stationary core s(t_i), i < samples, from the spectral
/// representation with 2K noise variables ordered (xi_1, xi'_1, xi_2, xi'_2, ...).
std::vector<double> stationary_core(const DiscreteSpectrum& spectrum, std::span<const double> noise,
                                    std::size_t samples, double dt);

/// a(t_i) = q(t_i) s(t_i); consumes 2K standard normal draws from rng.
AccelTimeSeries synthesize(const GroundMotionParams& x, const SynthesisConfig& cfg, Rng& rng);

struct IntensityMeasures {
  double pga = 0.0;             ///< [g]
  double sa = 0.0;              ///< pseudo-spectral acceleration [g]
  double arias_integral = 0.0;  ///< int a^2 dt [g^2 s]
};

/// Peak, pseudo-spectral acceleration of a linear SDOF oscillator (exact
/// piecewise-linear recurrence) and the trapezoidal energy integral.
IntensityMeasures compute_ims(const AccelTimeSeries& ts, double period, double damping);

}  // namespace seisfrag::gm
