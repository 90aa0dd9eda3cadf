#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "seisfrag/csv.hpp"
#include "seisfrag/serialization.hpp"
#include "seisfrag/study.hpp"

using namespace seisfrag;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("seisfrag_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

spce::Dataset toy_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  spce::Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(n), 4);
  d.outputs.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.outputs.size(); ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) d.inputs(i, j) = std::exp(0.5 * rng.normal());
    d.outputs[i] = std::exp(-3.0 + std::log(d.inputs(i, 0)) + 0.4 * rng.normal());
  }
  return d;
}

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.index(200)) - 100);
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(io::parse_double("nan")));
  EXPECT_THROW(io::parse_double("1.5x"), DomainError);
}

TEST(Csv, GenericTableRoundTrip) {
  const auto dir = scratch("table");
  io::CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x"}, {"2", "y"}};
  io::write_csv(dir / "t.csv", t);
  EXPECT_EQ(slurp(dir / "t.csv"), "a,b\n1,x\n2,y\n");
  const auto back = io::read_csv(dir / "t.csv");
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("b"), 1u);
  EXPECT_THROW(back.column("c"), DomainError);
  EXPECT_THROW(io::read_csv(dir / "missing.csv"), DomainError);
}

TEST(Csv, PoolRoundTrip) {
  const auto dir = scratch("pool");
  std::vector<io::PoolRow> rows(3);
  for (std::size_t i = 0; i < 3; ++i) {
    rows[i].x = {0.01 * (i + 1), 10.0 + i, 12.5, 4.0 + 0.1 * i, 0.9};
    rows[i].edp = 1.0 / 3.0 + i;
    rows[i].pga = 0.2;
    rows[i].sa = 0.31;
    rows[i].arias = 0.011;
  }
  io::write_pool_csv(dir / "pool.csv", rows);
  EXPECT_EQ(slurp(dir / "pool.csv").substr(0, 38), "ia,t_mid,d595,omega_g,edp,pga,sa,arias");
  const auto back = io::read_pool_csv(dir / "pool.csv");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].x.ia, rows[i].x.ia);
    EXPECT_EQ(back[i].x.omega_g, rows[i].x.omega_g);
    EXPECT_EQ(back[i].edp, rows[i].edp);
    EXPECT_EQ(back[i].arias, rows[i].arias);
  }
}

TEST(Csv, ResultsAndParamsRoundTrip) {
  const auto dir = scratch("results");
  const std::vector<io::ResultRow> rows{{"spce", 250, 0, "ws_error", 0.125}, {"lm", 4000, 4, "eps_p_0.07", NAN}};
  io::write_results_csv(dir / "r.csv", rows);
  EXPECT_EQ(slurp(dir / "r.csv"), "model,N,repetition,metric,value\nspce,250,0,ws_error,0.125\nlm,4000,4,eps_p_0.07,nan\n");
  const auto back = io::read_results_csv(dir / "r.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].model, "lm");
  EXPECT_EQ(back[1].n, 4000u);
  EXPECT_TRUE(std::isnan(back[1].value));

  const std::vector<gm::GroundMotionParams> xs{{0.01, 9.0, 11.0, 5.0, 0.9}, {0.2, 20.0, 30.0, 2.5, 0.9}};
  io::write_params_csv(dir / "p.csv", xs);
  const auto px = io::read_params_csv(dir / "p.csv");
  ASSERT_EQ(px.size(), 2u);
  EXPECT_EQ(px[1].d595, 30.0);
  EXPECT_EQ(px[1].zeta_g, 0.9);
}

TEST(Csv, MotionBatchRoundTrip) {
  const auto dir = scratch("motions");
  Rng rng(2);
  const gm::GroundMotionParams x{0.02, 8.0, 10.0, 6.0, 0.9};
  gm::SynthesisConfig cfg;
  const std::vector<gm::AccelTimeSeries> ms{gm::synthesize(x, cfg, rng), gm::synthesize(x, cfg, rng)};
  io::write_motion_batch(dir / "m.csv", dir / "m.json", ms, {x, x}, {11, 12}, cfg);
  const auto back = io::read_motion_batch(dir / "m.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].dt, ms[0].dt);
  EXPECT_EQ(back[1].values, ms[1].values);
  const auto side = nlohmann::json::parse(slurp(dir / "m.json"));
  EXPECT_EQ(side["records"].size(), 2u);
  EXPECT_EQ(slurp(dir / "m.csv").substr(0, 9), "dt,n,valu");
}

TEST(Csv, ResponseDumpHeader) {
  const auto dir = scratch("response");
  Rng rng(3);
  const auto ag = gm::synthesize({0.02, 8.0, 10.0, 6.0, 0.9}, {}, rng);
  const auto r = structure::integrate(structure::ShearFrameModel::table2(), ag);
  io::write_response_csv(dir / "r.csv", r);
  const auto t = io::read_csv(dir / "r.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "v1", "v2", "v3", "z1", "z2", "z3"}));
  EXPECT_EQ(t.rows.size(), ag.values.size());
}

TEST(Serialization, EveryKindRoundTrips) {
  const auto data = toy_data(300, 4);
  study::StudyConfig cfg = study::StudyConfig::desk();
  cfg.spce.degree_grid = {1};
  cfg.spce.q_grid = {1.0};
  const auto dir = scratch("models");
  Eigen::VectorXd x(4);
  x << 1.2, 0.9, 1.1, 0.8;
  for (const std::string kind : {"spce", "lm", "probit", "kcde"}) {
    const io::AnyModel m = study::fit_model(kind, data, cfg, 5, 0.05);
    EXPECT_EQ(io::model_kind(m), kind);
    const std::string text = io::serialize(m);
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j["kind"], kind);
    const io::AnyModel back = io::deserialize(text);
    EXPECT_EQ(io::serialize(back), text);
    EXPECT_EQ(study::model_fragility(back, x, 0.05), study::model_fragility(m, x, 0.05));
    io::save_model(dir / (kind + ".json"), m);
    EXPECT_EQ(io::serialize(io::load_model(dir / (kind + ".json"))), text);
  }
}

TEST(Serialization, SpceSchemaFields) {
  const auto data = toy_data(200, 6);
  study::StudyConfig cfg = study::StudyConfig::desk();
  cfg.spce.degree_grid = {1};
  cfg.spce.q_grid = {1.0};
  const auto j = nlohmann::json::parse(io::serialize(study::fit_model("spce", data, cfg, 7)));
  EXPECT_EQ(j["transform"]["mu"].size(), 4u);
  EXPECT_EQ(j["transform"]["sigma"].size(), 4u);
  EXPECT_EQ(j["transform"]["R"].size(), 4u);
  EXPECT_EQ(j["truncation"].size(), j["coeffs"].size());
  EXPECT_EQ(j["meta"]["N"], 200);
  EXPECT_TRUE(j["meta"].contains("cv_score"));
  EXPECT_TRUE(j["meta"].contains("seed"));
  EXPECT_GT(j["sigma"].get<double>(), 0.0);
}

TEST(Serialization, MalformedInputIsADomainError) {
  EXPECT_THROW(io::deserialize("{"), DomainError);
  EXPECT_THROW(io::deserialize("[]"), DomainError);
  EXPECT_THROW(io::deserialize(R"({"kind":"forest"})"), DomainError);
  EXPECT_THROW(io::deserialize(R"({"kind":"lm","beta0":1.0,"betas":[1,2]})"), DomainError);
  EXPECT_THROW(io::deserialize(R"({"kind":"lm","beta0":1.0,"betas":[1,2],"sigma":-1})"), DomainError);
  const auto data = toy_data(300, 8);
  const std::string text = io::serialize(study::fit_model("spce", data, [] {
    auto c = study::StudyConfig::desk();
    c.spce.degree_grid = {1};
    c.spce.q_grid = {1.0};
    return c;
  }(), 9));
  auto j = nlohmann::json::parse(text);
  j["coeffs"].erase(0);
  EXPECT_THROW(io::deserialize(j.dump()), DomainError);
  EXPECT_THROW(io::load_model("/nonexistent/model.json"), DomainError);
}

TEST(Config, ProfilesValidate) {
  EXPECT_NO_THROW(study::StudyConfig::desk().validate());
  EXPECT_NO_THROW(study::StudyConfig::paper().validate());
  EXPECT_THROW(study::StudyConfig::for_profile("laptop"), DomainError);
  EXPECT_EQ(study::StudyConfig::paper().pool_size, 100000u);
}

TEST(Config, JsonRoundTripIsStable) {
  const auto cfg = study::StudyConfig::desk();
  const std::string text = study::config_to_json(cfg);
  study::StudyConfig back = study::StudyConfig::paper();
  study::apply_config_json(back, text);
  EXPECT_EQ(study::config_to_json(back), text);
}

TEST(Config, OverlayAndErrors) {
  study::StudyConfig cfg = study::StudyConfig::desk();
  study::apply_config_json(cfg, R"({"pool_size": 500, "spce": {"folds": 3}, "thresholds": [0.05]})");
  EXPECT_EQ(cfg.pool_size, 500u);
  EXPECT_EQ(cfg.spce.folds, 3u);
  EXPECT_EQ(cfg.thresholds, std::vector<double>{0.05});
  try {
    study::apply_config_json(cfg, R"({"spce": {"fold": 3}})");
    FAIL() << "unknown key accepted";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("spce.fold"), std::string::npos);
  }
  try {
    study::apply_config_json(cfg, R"({"repetitions": "five"})");
    FAIL() << "type mismatch accepted";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("repetitions"), std::string::npos);
  }
  EXPECT_THROW(study::apply_config_json(cfg, "{not json"), DomainError);
  study::StudyConfig bad = study::StudyConfig::desk();
  bad.sample_sizes = {0};
  EXPECT_THROW(bad.validate(), DomainError);
  bad = study::StudyConfig::desk();
  bad.ccdf.model = "probit";
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Config, ProfileKeyRebasesDefaults) {
  study::StudyConfig cfg = study::StudyConfig::desk();
  cfg.master_seed = 77;
  study::apply_config_json(cfg, R"({"profile": "paper"})");
  EXPECT_EQ(cfg.profile, "paper");
  EXPECT_EQ(cfg.pool_size, 100000u);
  EXPECT_EQ(cfg.master_seed, 77u);
}
