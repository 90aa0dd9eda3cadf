#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "seisfrag/metrics.hpp"
#include "seisfrag/study.hpp"

using namespace seisfrag;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

study::StudyConfig tiny(const std::string& name) {
  study::StudyConfig c = study::StudyConfig::desk();
  c.output_dir = (fs::temp_directory_path() / ("seisfrag_study_" + name)).string();
  fs::remove_all(c.output_dir);
  c.pool_size = 150;
  c.chunk_size = 40;
  c.sample_sizes = {60, 120};
  c.repetitions = 2;
  c.validation_points = 4;
  c.replications_per_point = 12;
  c.thresholds = {0.005, 0.02};
  c.n_surrogate = 1000;
  c.spce.degree_grid = {1};
  c.spce.q_grid = {1.0};
  c.spce.restarts = 1;
  c.kcde.max_eval_points = 60;
  c.ccdf.fit_size = 100;
  c.ccdf.draws = 2000;
  c.classical.sample_size = 100;
  c.surface.fit_size = 100;
  c.surface.ia_grid = {0.005, 0.02, 0.08};
  c.surface.omega_grid = {3.0, 8.0};
  c.surface.n_nuisance = 200;
  c.surface.validation_ia = {0.03};
  c.surface.validation_omega = {5.0};
  c.surface.replications = 10;
  return c;
}

study::StudyConfig small_pool(const std::string& name, std::size_t n) {
  auto c = tiny(name);
  c.pool_size = n;
  c.sample_sizes = {10};
  c.ccdf.fit_size = c.classical.sample_size = c.surface.fit_size = 10;
  return c;
}

// One pool shared by the tests that only read it.
const std::vector<io::PoolRow>& shared_pool() {
  static const std::vector<io::PoolRow> pool = [] {
    const auto cfg = tiny("shared");
    return study::build_pool(cfg).rows;
  }();
  return pool;
}

}  // namespace

TEST(Simulator, DeterministicGivenSeed) {
  const auto cfg = study::StudyConfig::desk();
  const study::Simulator sim(cfg);
  const gm::GroundMotionParams x{0.02, 10.0, 12.0, 5.0, 0.9};
  Rng a(3), b(3), c(4);
  const auto ra = sim.run(x, a), rb = sim.run(x, b), rc = sim.run(x, c);
  EXPECT_EQ(ra.edp, rb.edp);
  EXPECT_EQ(ra.sa, rb.sa);
  EXPECT_NE(ra.edp, rc.edp);
  EXPECT_GT(ra.edp, 0.0);
  EXPECT_GT(ra.pga, 0.0);
  EXPECT_NEAR(sim.sa_period(), 0.895176, 1e-6);
}

TEST(Pool, RowCountAndResume) {
  const auto cfg = tiny("pool");
  const auto first = study::build_pool(cfg);
  EXPECT_EQ(first.rows.size() + first.failures.size(), cfg.pool_size);
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "pool.csv"));
  const auto meta = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "pool_meta.json"));
  EXPECT_EQ(meta["chunks"], 4);
  EXPECT_EQ(meta["chunks_reused"], 0);
  const std::string text = slurp(fs::path(cfg.output_dir) / "pool.csv");

  fs::remove(fs::path(cfg.output_dir) / "pool.csv");
  fs::remove(fs::path(cfg.output_dir) / "pool_chunks" / "chunk_00002.csv");
  const auto second = study::build_pool(cfg);
  const auto meta2 = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "pool_meta.json"));
  EXPECT_EQ(meta2["chunks_reused"], 3);
  EXPECT_EQ(slurp(fs::path(cfg.output_dir) / "pool.csv"), text);
  EXPECT_EQ(study::load_pool(cfg).size(), first.rows.size());
}

TEST(Pool, ThreadCountDoesNotChangeRows) {
  const auto a = small_pool("pool_t1", 30);
  auto b = small_pool("pool_t3", 30);
  b.threads = 3;
  study::build_pool(a);
  study::build_pool(b);
  EXPECT_EQ(slurp(fs::path(a.output_dir) / "pool.csv"), slurp(fs::path(b.output_dir) / "pool.csv"));
}

TEST(Reference, ReproducibleAndSpread) {
  const auto cfg = tiny("reference");
  const auto& pool = shared_pool();
  const auto a = study::build_reference(cfg, pool);
  ASSERT_EQ(a.bundle.points.size(), cfg.validation_points);
  for (std::size_t p = 0; p < a.edps.size(); ++p) {
    EXPECT_EQ(a.edps[p].size(), cfg.replications_per_point);
    std::vector<double> logs;
    for (double v : a.edps[p]) logs.push_back(std::log(v));
    EXPECT_GT(metrics::population_variance(logs), 0.0);
    EXPECT_EQ(a.bundle.references[p].size(), a.edps[p].size());
  }
  EXPECT_NEAR(a.bundle.pool_variance, study::pool_log_variance(pool), 1e-15);
  const auto b = study::load_reference(cfg, pool);
  ASSERT_EQ(b.edps.size(), a.edps.size());
  for (std::size_t p = 0; p < a.edps.size(); ++p) EXPECT_EQ(a.edps[p], b.edps[p]);

  auto other = tiny("reference_again");
  const auto c = study::build_reference(other, pool);
  for (std::size_t p = 0; p < a.edps.size(); ++p) EXPECT_EQ(a.edps[p], c.edps[p]);
}

TEST(Reference, ReplicationsMatchTheSimulator) {
  const auto cfg = tiny("reference_oracle");
  const auto ref = study::build_reference(cfg, shared_pool());
  const study::Simulator sim(cfg);
  Rng rng(derive_seed(cfg.master_seed, Stream::replication, 1, 3));
  EXPECT_EQ(sim.run(ref.bundle.points[1], rng).edp, ref.edps[1][3]);
}

TEST(Subsample, DistinctRowsFromPool) {
  const auto& pool = shared_pool();
  const auto s = study::subsample(pool, 50, 9);
  ASSERT_EQ(s.size(), 50u);
  std::vector<double> edps;
  for (const auto& r : s) edps.push_back(r.edp);
  std::sort(edps.begin(), edps.end());
  EXPECT_EQ(std::adjacent_find(edps.begin(), edps.end()), edps.end());
  const auto again = study::subsample(pool, 50, 9);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(s[i].edp, again[i].edp);
  EXPECT_THROW(study::subsample(pool, pool.size() + 1, 9), DomainError);
}

TEST(Convergence, ThreadIndependentAndComplete) {
  auto a = tiny("conv_t1");
  auto b = tiny("conv_t3");
  b.threads = 3;
  const auto& pool = shared_pool();
  const auto ref = study::build_reference(a, pool);
  const auto ra = study::run_convergence(a, pool, ref);
  const auto rb = study::run_convergence(b, pool, ref);
  EXPECT_EQ(slurp(fs::path(a.output_dir) / "results.csv"), slurp(fs::path(b.output_dir) / "results.csv"));
  EXPECT_EQ(slurp(fs::path(a.output_dir) / "failures.csv"), slurp(fs::path(b.output_dir) / "failures.csv"));

  // Every (model, N, repetition) cell reports each of its metrics once.
  std::size_t ws = 0, eps = 0;
  for (const auto& r : ra.rows) {
    ws += r.metric == "ws_error";
    eps += r.metric.rfind("eps_p_", 0) == 0;
    if (r.metric == "ws_error" && std::isfinite(r.value)) EXPECT_GT(r.value, 0.0);
  }
  EXPECT_EQ(ws, 3u * 2u * 2u);
  EXPECT_EQ(eps, 4u * 2u * 2u * 2u);
  EXPECT_TRUE(fs::exists(fs::path(a.output_dir) / "converge_meta.json"));
}

TEST(Convergence, NoModelsGivesEmptyResults) {
  auto cfg = tiny("conv_empty");
  cfg.models = {};
  const auto& pool = shared_pool();
  const auto ref = study::build_reference(cfg, pool);
  const auto r = study::run_convergence(cfg, pool, ref);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(slurp(fs::path(cfg.output_dir) / "results.csv"), "model,N,repetition,metric,value\n");
  const auto meta = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "converge_meta.json"));
  EXPECT_TRUE(meta.is_object());
}

TEST(Ccdf, CurvesAreProbabilitiesAndProbitIsRejected) {
  auto cfg = tiny("ccdf");
  const auto& pool = shared_pool();
  const auto t = study::run_ccdf(cfg, pool);
  ASSERT_EQ(t.delta.size(), cfg.ccdf.grid_points);
  for (std::size_t i = 0; i < t.delta.size(); ++i) {
    EXPECT_GE(t.model[i], 0.0);
    EXPECT_LE(t.model[i], 1.0);
    if (i > 0) {
      EXPECT_LE(t.pool[i], t.pool[i - 1]);
      EXPECT_LE(t.model[i], t.model[i - 1]);
    }
  }
  std::vector<double> edps;
  for (const auto& r : pool) edps.push_back(r.edp);
  EXPECT_EQ(t.pool, metrics::empirical_ccdf(edps, t.delta));

  cfg.ccdf.model = "probit";
  EXPECT_THROW(cfg.validate(), DomainError);
  const io::AnyModel probit = study::fit_model("probit", study::make_dataset(pool), tiny("ccdf_probit"), 1, 0.005);
  EXPECT_THROW(study::run_ccdf(tiny("ccdf_probit"), pool, &probit), DomainError);
}

TEST(ClassicalIm, CurvesAreBoundedAndLinearModelIsMonotone) {
  const auto cfg = tiny("classical");
  for (const std::string im : {"pga", "sa"}) {
    const auto r = study::run_classical_im(cfg, shared_pool(), im);
    ASSERT_FALSE(r.curves.empty());
    double prev = -1.0, prev_im = 0.0, prev_thr = -1.0;
    for (const auto& c : r.curves) {
      EXPECT_GE(c.p_f, 0.0);
      EXPECT_LE(c.p_f, 1.0);
      if (c.model != "lm") continue;
      if (c.threshold == prev_thr && c.im > prev_im) EXPECT_GE(c.p_f, prev);
      prev = c.p_f;
      prev_im = c.im;
      prev_thr = c.threshold;
    }
    EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / ("classical_" + im + ".csv")));
  }
  EXPECT_THROW(study::run_classical_im(cfg, shared_pool(), "pgv"), DomainError);
}

TEST(Surface, ShapesAndValidationRows) {
  const auto cfg = tiny("surface");
  const auto r = study::run_fragility_surface(cfg, shared_pool());
  ASSERT_EQ(r.surfaces.size(), cfg.thresholds.size());
  for (const auto& s : r.surfaces) {
    EXPECT_EQ(s.rows(), 3);
    EXPECT_EQ(s.cols(), 2);
    EXPECT_GE(s.minCoeff(), 0.0);
    EXPECT_LE(s.maxCoeff(), 1.0);
  }
  EXPECT_EQ(r.validation.size(), cfg.thresholds.size());
  EXPECT_EQ(r.mean_abs_error.size(), cfg.thresholds.size());
  for (const auto& v : r.validation) {
    EXPECT_GE(v.reference, 0.0);
    EXPECT_LE(v.reference, 1.0);
  }
}

TEST(ExportMotions, RecordsMatchPoolRows) {
  const auto cfg = tiny("motions");
  study::export_motions(cfg, 3);
  const auto motions = io::read_motion_batch(fs::path(cfg.output_dir) / "motions.csv");
  const auto params = io::read_params_csv(fs::path(cfg.output_dir) / "params.csv");
  ASSERT_EQ(motions.size(), 3u);
  ASSERT_EQ(params.size(), 3u);
  const auto& pool = shared_pool();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(params[i].ia, pool[i].x.ia);
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "response.csv"));
}
