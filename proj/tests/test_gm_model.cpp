#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "seisfrag/common.hpp"
#include "seisfrag/gm_model.hpp"
#include "support/oracles.hpp"

using namespace seisfrag;
using namespace seisfrag::gm;

namespace {

double sample_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<std::vector<double>> log_columns(const std::vector<GroundMotionParams>& xs) {
  std::vector<std::vector<double>> c(4);
  for (const auto& x : xs) {
    const auto r = x.random_part();
    for (int j = 0; j < 4; ++j) c[j].push_back(std::log(r[j]));
  }
  return c;
}

}  // namespace

TEST(JointModel, ZeroStandardNormalGivesMedians) {
  const auto joint = ParamsJointModel::table1();
  const GroundMotionParams x = joint.from_standard_normal(Eigen::Vector4d::Zero());
  EXPECT_NEAR(x.ia, std::exp(-4.61), 1e-15);
  EXPECT_NEAR(x.t_mid / std::exp(2.55), 1.0, 1e-14);
  EXPECT_NEAR(x.d595 / std::exp(2.67), 1.0, 1e-14);
  EXPECT_NEAR(x.omega_g / std::exp(1.42), 1.0, 1e-14);
  EXPECT_NEAR(x.ia, 0.00995, 0.00995 * 1e-3);
  EXPECT_NEAR(x.t_mid, 12.81, 12.81 * 1e-3);
  EXPECT_NEAR(x.d595, 14.44, 14.44 * 1e-3);
  EXPECT_NEAR(x.omega_g, 4.14, 4.14 * 1e-3);
  EXPECT_EQ(x.zeta_g, 0.9);
}

TEST(JointModel, CholeskyReproducesCorrelation) {
  const auto joint = ParamsJointModel::table1();
  const Eigen::Matrix4d l = joint.cholesky();
  EXPECT_LT((l * l.transpose() - joint.correlation()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_DOUBLE_EQ(joint.correlation()(1, 2), 0.68);
  EXPECT_DOUBLE_EQ(joint.correlation()(0, 3), -0.13);
}

TEST(JointModel, SampledTmidDurationCorrelation) {
  Rng rng(11);
  const auto c = log_columns(sample_params(ParamsJointModel::table1(), 100000, rng));
  EXPECT_NEAR(sample_correlation(c[1], c[2]), 0.68, 0.02);
}

TEST(JointModel, IdentityCorrelationGivesIndependentLogs) {
  const auto t1 = ParamsJointModel::table1();
  const ParamsJointModel joint(t1.log_means(), t1.log_stds(), Eigen::Matrix4d::Identity());
  Rng rng(12);
  const auto c = log_columns(sample_params(joint, 100000, rng));
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) EXPECT_NEAR(sample_correlation(c[i], c[j]), 0.0, 0.02);
}

TEST(JointModel, SampledMediansMatchLogMeans) {
  Rng rng(13);
  const auto joint = ParamsJointModel::table1();
  auto c = log_columns(sample_params(joint, 100000, rng));
  for (int j = 0; j < 4; ++j) {
    std::nth_element(c[j].begin(), c[j].begin() + 50000, c[j].end());
    EXPECT_NEAR(std::exp(c[j][50000]) / std::exp(joint.log_means()[j]), 1.0, 0.03);
  }
}

TEST(JointModel, RejectsIndefiniteCorrelation) {
  Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
  r(0, 1) = r(1, 0) = 1.2;
  EXPECT_THROW(ParamsJointModel(Eigen::Vector4d::Zero(), Eigen::Vector4d::Ones(), r), DomainError);
}

TEST(Modulating, FitReproducesQuantilesByIntegration) {
  const ModulatingParams q = fit_modulating(0.05, 8.0, 15.0);
  EXPECT_GT(q.alpha3, 0.0);
  const double t5 = oracle::modulating_quantile(q, 0.05);
  const double t45 = oracle::modulating_quantile(q, 0.45);
  const double t95 = oracle::modulating_quantile(q, 0.95);
  EXPECT_NEAR(t45 / 8.0, 1.0, 1e-6);
  EXPECT_NEAR((t95 - t5) / 15.0, 1.0, 1e-6);
  EXPECT_NEAR(oracle::modulating_energy(q, INFINITY) / 0.05, 1.0, 1e-6);
}

TEST(Modulating, DoublingIaScalesOnlyAlpha1) {
  const ModulatingParams a = fit_modulating(0.05, 8.0, 15.0);
  const ModulatingParams b = fit_modulating(0.10, 8.0, 15.0);
  EXPECT_NEAR(b.alpha2, a.alpha2, 1e-12 * a.alpha2);
  EXPECT_NEAR(b.alpha3, a.alpha3, 1e-12 * a.alpha3);
  EXPECT_NEAR(b.alpha1 / a.alpha1, std::sqrt(2.0), 1e-12);
}

TEST(Modulating, LateCompactMotionKeepsItsEnergy) {
  for (const auto& [ia, tm, d] : {std::tuple{0.0773, 281.84, 25.51}, std::tuple{0.0589, 66.33, 9.55},
                                   std::tuple{0.0064, 186.3, 28.6}}) {
    const ModulatingParams q = fit_modulating(ia, tm, d);
    EXPECT_TRUE(std::isfinite(q.log_alpha1));
    EXPECT_GT(q.value(tm), 0.0);
    EXPECT_NEAR(oracle::modulating_energy(q, INFINITY) / ia, 1.0, 1e-6);
    EXPECT_NEAR(oracle::modulating_quantile(q, 0.45) / tm, 1.0, 1e-6);
  }
}

TEST(Modulating, RejectsNonPositiveInput) {
  EXPECT_THROW(fit_modulating(-1.0, 8.0, 15.0), DomainError);
  EXPECT_THROW(fit_modulating(0.05, 0.0, 15.0), DomainError);
}

TEST(KanaiTajimi, GridIntegralIsOne) {
  const FrequencyGrid grid = FrequencyGrid::nyquist(0.01, 2048);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double wg = std::exp(1.42 + 0.59 * rng.normal());
    const double zg = 0.05 + 0.95 * rng.uniform();
    double sum = 0.0;
    for (std::size_t k = 1; k <= grid.count; ++k) sum += kt_psd(grid.omega(k), wg, zg, grid) * grid.d_omega;
    EXPECT_NEAR(sum, 1.0, 1e-4);
  }
}

TEST(KanaiTajimi, PeakToOriginRatio) {
  const FrequencyGrid grid = FrequencyGrid::nyquist(0.01, 2048);
  const double z = 0.9, wg = 4.14;
  const double ratio = kt_psd(wg, wg, z, grid) / kt_psd(0.0, wg, z, grid);
  EXPECT_NEAR(ratio, (1 + 4 * z * z) / (4 * z * z), 1e-12);
  EXPECT_NEAR(ratio, 1.309, 1e-3);
}

TEST(KanaiTajimi, NarrowBandConcentratesNearMainFrequency) {
  const FrequencyGrid grid = FrequencyGrid::nyquist(0.01, 2048);
  const double wg = 4.14, z = 0.05;
  auto band = [&](double lo, double hi) {
    double s = 0.0;
    for (std::size_t k = 1; k <= grid.count; ++k)
      if (grid.omega(k) >= lo && grid.omega(k) <= hi) s += kt_psd(grid.omega(k), wg, z, grid) * grid.d_omega;
    return s;
  };
  EXPECT_GT(band(0.9 * wg, 1.1 * wg), band(3 * wg - 0.1 * wg, 3 * wg + 0.1 * wg));
}

TEST(KanaiTajimi, RejectsNonPositiveMainFrequency) {
  const FrequencyGrid grid = FrequencyGrid::nyquist(0.01, 2048);
  EXPECT_THROW(kt_psd(1.0, 0.0, 0.9, grid), DomainError);
}

TEST(HighPass, FilteredSpectrumVanishesAtOriginAndKeepsUnitVariance) {
  EXPECT_EQ(highpass_gain(0.0, 2 * kPi * 0.2, 1.0), 0.0);
  const FrequencyGrid grid = FrequencyGrid::nyquist(0.01, 2048);
  const DiscreteSpectrum s(grid, 4.14, 0.9, 2 * kPi * 0.2, 1.0);
  EXPECT_NEAR(s.total(), 1.0, 1e-12);
  const DiscreteSpectrum raw(grid, 4.14, 0.9, 2 * kPi * 0.2, 1.0, false);
  EXPECT_LT(raw.total(), 1.0);
  EXPECT_LT(s.density(1), DiscreteSpectrum(grid, 4.14, 0.9).density(1));
}

TEST(Synthesis, SameSeedSameSeries) {
  const GroundMotionParams x{0.02, 10.0, 12.0, 5.0, 0.9};
  Rng a(77), b(77);
  const auto sa = synthesize(x, {}, a);
  const auto sb = synthesize(x, {}, b);
  EXPECT_EQ(sa.values, sb.values);
}

TEST(Synthesis, MeanEnergyMatchesIa) {
  const GroundMotionParams x = ParamsJointModel::table1().from_standard_normal(Eigen::Vector4d::Zero());
  double total = 0.0;
  for (int s = 0; s < 500; ++s) {
    Rng rng(derive_seed(5, static_cast<std::uint64_t>(s)));
    total += compute_ims(synthesize(x, {}, rng), 1.0, 0.05).arias_integral;
  }
  EXPECT_NEAR(total / 500.0 / x.ia, 1.0, 0.10);
}

TEST(Synthesis, StationaryCoreHasUnitVariance) {
  const GroundMotionParams x = ParamsJointModel::table1().from_standard_normal(Eigen::Vector4d::Zero());
  const SynthesisConfig cfg;
  const SynthesisPlan plan = plan_synthesis(x, cfg);
  const DiscreteSpectrum spec(plan.grid, x.omega_g, x.zeta_g, cfg.omega_cut, cfg.zeta_hp);
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  std::vector<double> noise(2 * plan.grid.count);
  for (int s = 0; s < 500; ++s) {
    Rng rng(derive_seed(6, static_cast<std::uint64_t>(s)));
    for (double& v : noise) v = rng.normal();
    for (double v : stationary_core(spec, noise, plan.samples, cfg.dt)) {
      sum += v;
      sq += v * v;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  EXPECT_NEAR(sq / static_cast<double>(count) - mean * mean, 1.0, 0.1);
}

TEST(Synthesis, NegatingNoiseNegatesCore) {
  const FrequencyGrid grid = FrequencyGrid::nyquist(0.01, 256);
  const DiscreteSpectrum spec(grid, 4.0, 0.9, 1.2, 1.0);
  Rng rng(9);
  std::vector<double> noise(512), neg(512);
  for (std::size_t i = 0; i < noise.size(); ++i) neg[i] = -(noise[i] = rng.normal());
  const auto a = stationary_core(spec, noise, 400, 0.01);
  const auto b = stationary_core(spec, neg, 400, 0.01);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], -b[i]);
}

TEST(Synthesis, TruncatedRecordCarriesWarning) {
  SynthesisConfig cfg;
  cfg.extend_duration = false;
  cfg.duration = 5.0;
  Rng rng(1);
  const auto ts = synthesize({0.02, 10.0, 12.0, 5.0, 0.9}, cfg, rng);
  EXPECT_LT(ts.energy_coverage, 0.99);
  EXPECT_FALSE(ts.warning.empty());
}

TEST(IntensityMeasures, ZeroRecord) {
  AccelTimeSeries ts{0.01, std::vector<double>(500, 0.0)};
  const auto ims = compute_ims(ts, 0.9, 0.02);
  EXPECT_EQ(ims.pga, 0.0);
  EXPECT_EQ(ims.sa, 0.0);
  EXPECT_EQ(ims.arias_integral, 0.0);
}

TEST(IntensityMeasures, ConstantRecordEnergy) {
  AccelTimeSeries ts{0.01, std::vector<double>(201, 1.0)};
  EXPECT_NEAR(compute_ims(ts, 0.9, 0.02).arias_integral, 2.0, 1e-12);
  EXPECT_EQ(compute_ims(ts, 0.9, 0.02).pga, 1.0);
}

TEST(IntensityMeasures, ResonantSineSpectralAcceleration) {
  const double period = 0.5, wn = 2 * kPi / period, amp = 0.1, dt = 0.002;
  AccelTimeSeries ts{dt, {}};
  for (int i = 0; i <= 100000; ++i) ts.values.push_back(amp * std::sin(wn * dt * i));
  EXPECT_NEAR(compute_ims(ts, period, 0.02).sa / (amp / (2 * 0.02)), 1.0, 0.05);
}
