#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "seisfrag/gm_model.hpp"
#include "seisfrag/random.hpp"

namespace seisfrag::metrics {

class EmpiricalDistribution {
 public:
  EmpiricalDistribution() = default;
  /// Sorts the values; throws DomainError on empty or non-finite input.
  explicit EmpiricalDistribution(std::vector<double> values);

  const std::vector<double>& sorted_values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  /// Fraction of values strictly greater than t.
  double exceedance(double t) const;

 private:
  std::vector<double> values_;
};

/// int_0^1 (Q_a(u) - Q_b(u))^2 du for the empirical quantile step functions.
double wasserstein2_sq(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// Validation points with replicated ln-EDP reference samples.
struct ValidationBundle {
  std::vector<gm::GroundMotionParams> points;
  std::vector<EmpiricalDistribution> references;
  double pool_variance = 0.0;

  void validate() const;
};

/// Draws n values of ln Y at validation point `point` from a surrogate.
using LogSampler = std::function<std::vector<double>(std::size_t point, std::size_t n, Rng& rng)>;

/// Mean squared Wasserstein distance over the validation points, divided by
/// the pool variance. Point i samples from its own stream derived from seed.
double normalized_ws_error(const LogSampler& sampler, const ValidationBundle& bundle,
                           std::size_t n_surrogate, std::uint64_t seed, int threads = 1);

/// mean((p_ref - p_model)^2) / var(p_ref) with the population variance.
double fragility_rel_mse(const std::vector<double>& p_ref, const std::vector<double>& p_model);

/// P(Y >= delta) = count(y >= delta) / n at every grid value.
std::vector<double> empirical_ccdf(const std::vector<double>& samples, const std::vector<double>& grid);

double population_variance(const std::vector<double>& v);
double median(std::vector<double> v);

}  // namespace seisfrag::metrics
