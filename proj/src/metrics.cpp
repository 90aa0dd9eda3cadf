#include "seisfrag/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "seisfrag/common.hpp"
#include "seisfrag/parallel.hpp"

namespace seisfrag::metrics {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("EmpiricalDistribution: no samples");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("EmpiricalDistribution: non-finite sample");
  std::sort(values_.begin(), values_.end());
}

double EmpiricalDistribution::exceedance(double t) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), t);
  return static_cast<double>(values_.end() - it) / static_cast<double>(values_.size());
}

double wasserstein2_sq(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  if (a.empty() || b.empty()) throw DomainError("wasserstein2_sq: empty distribution");
  const auto& qa = a.sorted_values();
  const auto& qb = b.sorted_values();
  // Breakpoints k / na and l / nb on the common denominator na * nb.
  const auto na = static_cast<unsigned long long>(qa.size());
  const auto nb = static_cast<unsigned long long>(qb.size());
  unsigned long long pos = 0, end_a = nb, end_b = na;
  std::size_t i = 0, j = 0;
  long double sum = 0.0L;
  while (i < qa.size() && j < qb.size()) {
    const unsigned long long next = std::min(end_a, end_b);
    const long double d = static_cast<long double>(qa[i]) - static_cast<long double>(qb[j]);
    sum += d * d * static_cast<long double>(next - pos);
    pos = next;
    if (end_a == next) {
      ++i;
      end_a += nb;
    }
    if (end_b == next) {
      ++j;
      end_b += na;
    }
  }
  return static_cast<double>(sum / (static_cast<long double>(na) * static_cast<long double>(nb)));
}

void ValidationBundle::validate() const {
  if (points.empty()) throw DomainError("ValidationBundle: no validation points");
  if (references.size() != points.size()) throw DomainError("ValidationBundle: one reference per point");
  for (const auto& r : references)
    if (r.empty()) throw DomainError("ValidationBundle: empty reference distribution");
  if (!(pool_variance > 0.0)) throw DomainError("ValidationBundle: pool variance must be positive");
}

double normalized_ws_error(const LogSampler& sampler, const ValidationBundle& bundle,
                           std::size_t n_surrogate, std::uint64_t seed, int threads) {
  bundle.validate();
  if (n_surrogate < 1000) throw DomainError("normalized_ws_error: n_surrogate must be at least 1000");
  std::vector<double> dist(bundle.points.size());
  parallel_for(dist.size(), threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, Stream::surrogate, i));
    const EmpiricalDistribution draws(sampler(i, n_surrogate, rng));
    dist[i] = wasserstein2_sq(bundle.references[i], draws);
  });
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / static_cast<double>(dist.size()) / bundle.pool_variance;
}

double population_variance(const std::vector<double>& v) {
  if (v.empty()) throw DomainError("population_variance: empty input");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double fragility_rel_mse(const std::vector<double>& p_ref, const std::vector<double>& p_model) {
  if (p_ref.size() != p_model.size() || p_ref.empty())
    throw DomainError("fragility_rel_mse: vectors must be non-empty and of equal length");
  const double var = population_variance(p_ref);
  if (!(var > 0.0)) throw DomainError("fragility_rel_mse: reference fragility is constant");
  double s = 0.0;
  for (std::size_t i = 0; i < p_ref.size(); ++i) s += (p_ref[i] - p_model[i]) * (p_ref[i] - p_model[i]);
  return s / static_cast<double>(p_ref.size()) / var;
}

std::vector<double> empirical_ccdf(const std::vector<double>& samples, const std::vector<double>& grid) {
  if (samples.empty()) throw DomainError("empirical_ccdf: no samples");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(grid.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), grid[k]);
    out[k] = static_cast<double>(sorted.end() - it) / n;
  }
  return out;
}

}  // namespace seisfrag::metrics
