#include "seisfrag/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "seisfrag/baselines.hpp"
#include "seisfrag/common.hpp"
#include "seisfrag/parallel.hpp"
#include "seisfrag/spce.hpp"
#include "seisfrag/svg_plot.hpp"

namespace seisfrag::study {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

std::vector<double> lin_space(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string clean_message(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void say(std::ostream* log, const std::string& msg) {
  static std::mutex m;
  if (!log) return;
  std::lock_guard lock(m);
  *log << msg << std::endl;
}

const std::vector<std::string>& known_models() {
  static const std::vector<std::string> k{"spce", "lm", "probit", "kcde"};
  return k;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

StudyConfig StudyConfig::desk() {
  StudyConfig c;
  c.surface.ia_grid = log_space(0.005, 0.15, 20);
  c.surface.omega_grid = lin_space(1.0, 12.0, 12);
  return c;
}

StudyConfig StudyConfig::paper() {
  StudyConfig c = desk();
  c.profile = "paper";
  c.pool_size = 100000;
  c.sample_sizes = {250, 500, 1000, 2000, 4000};
  c.repetitions = 20;
  c.validation_points = 400;
  c.replications_per_point = 250;
  c.surface.replications = 250;
  return c;
}

StudyConfig StudyConfig::for_profile(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw DomainError("unknown profile '" + name + "' (expected desk or paper)");
}

bool StudyConfig::model_enabled(const std::string& kind) const {
  return std::find(models.begin(), models.end(), kind) != models.end();
}

void StudyConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw DomainError("config: " + field + " " + why);
  };
  if (pool_size < 1) fail("pool_size", "must be at least 1");
  if (sample_sizes.empty()) fail("sample_sizes", "must not be empty");
  for (auto n : sample_sizes) {
    if (n < 10) fail("sample_sizes", "entries must be at least 10");
    if (n > pool_size) fail("sample_sizes", "entries must not exceed pool_size");
  }
  if (repetitions < 1) fail("repetitions", "must be at least 1");
  if (validation_points < 1) fail("validation_points", "must be at least 1");
  if (replications_per_point < 2) fail("replications_per_point", "must be at least 2");
  if (thresholds.empty()) fail("thresholds", "must not be empty");
  for (double t : thresholds)
    if (!(t > 0.0)) fail("thresholds", "entries must be positive");
  std::set<std::string> seen;
  for (const auto& m : models) {
    if (std::find(known_models().begin(), known_models().end(), m) == known_models().end())
      fail("models", "contains unknown model '" + m + "' (expected spce, lm, probit, kcde)");
    if (!seen.insert(m).second) fail("models", "lists '" + m + "' twice");
  }
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  if (threads < 1) fail("threads", "must be at least 1");
  if (n_surrogate < 1000) fail("n_surrogate", "must be at least 1000");
  if (chunk_size < 1) fail("chunk_size", "must be at least 1");
  if (substeps < 1) fail("substeps", "must be at least 1");
  try {
    synthesis.validate();
  } catch (const DomainError& e) {
    fail("synthesis", e.what());
  }
  if (spce.nq < 2) fail("spce.nq", "must be at least 2");
  if (spce.folds < 2) fail("spce.folds", "must be at least 2");
  if (spce.degree_grid.empty() || spce.q_grid.empty() || spce.sigma_grid.empty())
    fail("spce", "grids must not be empty");
  for (int p : spce.degree_grid)
    if (p < 0) fail("spce.degree_grid", "entries must be non-negative");
  for (double q : spce.q_grid)
    if (!(q > 0.0 && q <= 1.0)) fail("spce.q_grid", "entries must lie in (0, 1]");
  for (double s : spce.sigma_grid)
    if (!(s > 0.0)) fail("spce.sigma_grid", "entries must be positive");
  if (spce.restarts < 1 || spce.cv_restarts < 1) fail("spce.restarts", "must be at least 1");
  if (spce.max_iterations < 1) fail("spce.max_iterations", "must be at least 1");
  if (kcde.folds < 2) fail("kcde.folds", "must be at least 2");
  if (kcde.max_eval_points < 1 || kcde.y_grid_points < 1 || kcde.max_cv_train < 50)
    fail("kcde", "sizes must be positive (max_cv_train at least 50)");
  if (ccdf.model == "probit") fail("ccdf.model", "probit does not allow resampling the EDP");
  if (ccdf.model != "spce" && ccdf.model != "lm" && ccdf.model != "kcde")
    fail("ccdf.model", "must be spce, lm or kcde");
  if (ccdf.fit_size < 10 || ccdf.fit_size > pool_size) fail("ccdf.fit_size", "must lie in [10, pool_size]");
  if (ccdf.draws < 1) fail("ccdf.draws", "must be at least 1");
  if (!(ccdf.delta_min > 0.0 && ccdf.delta_max > ccdf.delta_min)) fail("ccdf.delta_min", "must satisfy 0 < delta_min < delta_max");
  if (ccdf.grid_points < 2) fail("ccdf.grid_points", "must be at least 2");
  if (classical.sample_size < 10 || classical.sample_size > pool_size)
    fail("classical.sample_size", "must lie in [10, pool_size]");
  if (!(classical.sa_damping > 0.0 && classical.sa_damping < 1.0)) fail("classical.sa_damping", "must lie in (0, 1)");
  if (classical.curve_points < 2) fail("classical.curve_points", "must be at least 2");
  if (surface.fit_size < 10 || surface.fit_size > pool_size) fail("surface.fit_size", "must lie in [10, pool_size]");
  if (surface.ia_grid.empty() || surface.omega_grid.empty()) fail("surface", "grids must not be empty");
  for (double v : surface.ia_grid)
    if (!(v > 0.0)) fail("surface.ia_grid", "entries must be positive");
  for (double v : surface.omega_grid)
    if (!(v > 0.0)) fail("surface.omega_grid", "entries must be positive");
  for (double v : surface.validation_ia)
    if (!(v > 0.0)) fail("surface.validation_ia", "entries must be positive");
  for (double v : surface.validation_omega)
    if (!(v > 0.0)) fail("surface.validation_omega", "entries must be positive");
  if (surface.n_nuisance < 1) fail("surface.n_nuisance", "must be at least 1");
  if (surface.replications < 1) fail("surface.replications", "must be at least 1");
}

std::string config_to_json(const StudyConfig& c) {
  const auto& s = c.synthesis;
  json j = {
      {"profile", c.profile},
      {"pool_size", c.pool_size},
      {"sample_sizes", c.sample_sizes},
      {"repetitions", c.repetitions},
      {"validation_points", c.validation_points},
      {"replications_per_point", c.replications_per_point},
      {"thresholds", c.thresholds},
      {"master_seed", c.master_seed},
      {"models", c.models},
      {"output_dir", c.output_dir},
      {"threads", c.threads},
      {"n_surrogate", c.n_surrogate},
      {"chunk_size", c.chunk_size},
      {"substeps", c.substeps},
      {"synthesis",
       {{"dt", s.dt}, {"duration", s.duration}, {"n_freq", s.n_freq}, {"omega_cut", s.omega_cut},
        {"zeta_hp", s.zeta_hp}, {"extend_duration", s.extend_duration}, {"energy_scale", s.energy_scale},
        {"renormalize_highpass", s.renormalize_highpass}}},
      {"spce",
       {{"nq", c.spce.nq}, {"degree_grid", c.spce.degree_grid}, {"q_grid", c.spce.q_grid},
        {"sigma_grid", c.spce.sigma_grid}, {"folds", c.spce.folds}, {"restarts", c.spce.restarts},
        {"cv_restarts", c.spce.cv_restarts}, {"max_iterations", c.spce.max_iterations}}},
      {"kcde",
       {{"folds", c.kcde.folds}, {"max_eval_points", c.kcde.max_eval_points},
        {"y_grid_points", c.kcde.y_grid_points}, {"max_cv_train", c.kcde.max_cv_train}}},
      {"ccdf",
       {{"model", c.ccdf.model}, {"fit_size", c.ccdf.fit_size}, {"draws", c.ccdf.draws},
        {"delta_min", c.ccdf.delta_min}, {"delta_max", c.ccdf.delta_max}, {"grid_points", c.ccdf.grid_points}}},
      {"classical",
       {{"sample_size", c.classical.sample_size}, {"sa_damping", c.classical.sa_damping},
        {"curve_points", c.classical.curve_points}}},
      {"surface",
       {{"fit_size", c.surface.fit_size}, {"ia_grid", c.surface.ia_grid}, {"omega_grid", c.surface.omega_grid},
        {"n_nuisance", c.surface.n_nuisance}, {"validation_ia", c.surface.validation_ia},
        {"validation_omega", c.surface.validation_omega}, {"replications", c.surface.replications}}}};
  return j.dump(2);
}

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw DomainError("config: " + where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    used_.insert(key);
    out = convert<T>(*it, name(key));
  }

  template <class Fn>
  void child(const char* key, Fn&& fn) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    used_.insert(key);
    Reader r(*it, name(key));
    fn(r);
    r.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw DomainError("config: unknown key '" + name(it.key()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "document" : "'" + path_ + "'"; }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  static T convert(const json& v, const std::string& key) {
    auto bad = [&](const char* what) -> DomainError {
      return DomainError("config: '" + key + "' must be " + what);
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw bad("a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw bad("a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw bad("a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw bad("a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw bad("an integer");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw bad("an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], key + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace

void apply_config_json(StudyConfig& c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(std::string("config: parse error: ") + e.what());
  }
  Reader r(j, "");
  std::string profile;
  r.get("profile", profile);
  if (!profile.empty() && profile != c.profile) {
    // A profile key replaces the defaults before the other keys apply.
    StudyConfig base = StudyConfig::for_profile(profile);
    base.master_seed = c.master_seed;
    base.output_dir = c.output_dir;
    base.threads = c.threads;
    c = base;
  }
  r.get("pool_size", c.pool_size);
  r.get("sample_sizes", c.sample_sizes);
  r.get("repetitions", c.repetitions);
  r.get("validation_points", c.validation_points);
  r.get("replications_per_point", c.replications_per_point);
  r.get("thresholds", c.thresholds);
  r.get("master_seed", c.master_seed);
  r.get("models", c.models);
  r.get("output_dir", c.output_dir);
  r.get("threads", c.threads);
  r.get("n_surrogate", c.n_surrogate);
  r.get("chunk_size", c.chunk_size);
  r.get("substeps", c.substeps);
  r.child("synthesis", [&](Reader& s) {
    s.get("dt", c.synthesis.dt);
    s.get("duration", c.synthesis.duration);
    s.get("n_freq", c.synthesis.n_freq);
    s.get("omega_cut", c.synthesis.omega_cut);
    s.get("zeta_hp", c.synthesis.zeta_hp);
    s.get("extend_duration", c.synthesis.extend_duration);
    s.get("energy_scale", c.synthesis.energy_scale);
    s.get("renormalize_highpass", c.synthesis.renormalize_highpass);
  });
  r.child("spce", [&](Reader& s) {
    s.get("nq", c.spce.nq);
    s.get("degree_grid", c.spce.degree_grid);
    s.get("q_grid", c.spce.q_grid);
    s.get("sigma_grid", c.spce.sigma_grid);
    s.get("folds", c.spce.folds);
    s.get("restarts", c.spce.restarts);
    s.get("cv_restarts", c.spce.cv_restarts);
    s.get("max_iterations", c.spce.max_iterations);
  });
  r.child("kcde", [&](Reader& s) {
    s.get("folds", c.kcde.folds);
    s.get("max_eval_points", c.kcde.max_eval_points);
    s.get("y_grid_points", c.kcde.y_grid_points);
    s.get("max_cv_train", c.kcde.max_cv_train);
  });
  r.child("ccdf", [&](Reader& s) {
    s.get("model", c.ccdf.model);
    s.get("fit_size", c.ccdf.fit_size);
    s.get("draws", c.ccdf.draws);
    s.get("delta_min", c.ccdf.delta_min);
    s.get("delta_max", c.ccdf.delta_max);
    s.get("grid_points", c.ccdf.grid_points);
  });
  r.child("classical", [&](Reader& s) {
    s.get("sample_size", c.classical.sample_size);
    s.get("sa_damping", c.classical.sa_damping);
    s.get("curve_points", c.classical.curve_points);
  });
  r.child("surface", [&](Reader& s) {
    s.get("fit_size", c.surface.fit_size);
    s.get("ia_grid", c.surface.ia_grid);
    s.get("omega_grid", c.surface.omega_grid);
    s.get("n_nuisance", c.surface.n_nuisance);
    s.get("validation_ia", c.surface.validation_ia);
    s.get("validation_omega", c.surface.validation_omega);
    s.get("replications", c.surface.replications);
  });
  r.finish();
}

void apply_config_file(StudyConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("config: cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_json(cfg, buf.str());
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(const StudyConfig& cfg, structure::ShearFrameModel frame)
    : frame_(std::move(frame)),
      synthesis_(cfg.synthesis),
      sa_period_(structure::fundamental_period(frame_)),
      sa_damping_(cfg.classical.sa_damping) {
  frame_.validate();
  integration_.substeps = cfg.substeps;
}

SimOutput Simulator::run(const gm::GroundMotionParams& x, Rng& rng) const {
  const gm::AccelTimeSeries ts = gm::synthesize(x, synthesis_, rng);
  const structure::ResponseRecord rec = structure::integrate(frame_, ts, integration_);
  const gm::IntensityMeasures ims = gm::compute_ims(ts, sa_period_, sa_damping_);
  const double edp = structure::max_interstory_drift(rec);
  if (!(edp > 0.0) || !std::isfinite(edp)) throw SolverError("simulation produced a non-positive drift", ts.duration());
  return {edp, ims.pga, ims.sa, ims.arias_integral};
}

// ---------------------------------------------------------------------------
// Pool

namespace {

void write_failures(const fs::path& path, const std::vector<Failure>& failures) {
  io::CsvTable t;
  t.header = {"index", "message"};
  for (const auto& f : failures) t.rows.push_back({std::to_string(f.index), clean_message(f.message)});
  io::write_csv(path, t);
}

std::vector<Failure> read_failures(const fs::path& path) {
  const io::CsvTable t = io::read_csv(path);
  std::vector<Failure> out;
  for (const auto& r : t.rows) out.push_back({std::stoull(r[0]), r[1]});
  return out;
}

template <class Fn>
void guarded(std::string& error, Fn&& fn) {
  try {
    fn();
  } catch (const SolverError& e) {
    error = e.what();
  } catch (const FitError& e) {
    error = e.what();
  } catch (const DomainError& e) {
    error = e.what();
  }
}

}  // namespace

PoolBuild build_pool(const StudyConfig& cfg, std::ostream* log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Simulator sim(cfg);
  const gm::ParamsJointModel joint = gm::ParamsJointModel::table1();
  const fs::path dir = cfg.out() / "pool_chunks";
  fs::create_directories(dir);

  PoolBuild out;
  const std::size_t chunks = (cfg.pool_size + cfg.chunk_size - 1) / cfg.chunk_size;
  std::size_t reused = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    char name[64];
    std::snprintf(name, sizeof(name), "chunk_%05zu", c);
    const fs::path rows_path = dir / (std::string(name) + ".csv");
    const fs::path fail_path = dir / (std::string(name) + "_failures.csv");
    const std::size_t begin = c * cfg.chunk_size;
    const std::size_t end = std::min(cfg.pool_size, begin + cfg.chunk_size);
    if (fs::exists(rows_path) && fs::exists(fail_path)) {
      auto rows = io::read_pool_csv(rows_path);
      auto fails = read_failures(fail_path);
      if (rows.size() + fails.size() == end - begin) {
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
        out.failures.insert(out.failures.end(), fails.begin(), fails.end());
        ++reused;
        continue;
      }
    }
    std::vector<io::PoolRow> slots(end - begin);
    std::vector<std::string> errors(end - begin);
    parallel_for(end - begin, cfg.threads, [&](std::size_t k) {
      const std::size_t i = begin + k;
      Rng rng(derive_seed(cfg.master_seed, Stream::pool, i));
      Eigen::Vector4d u;
      for (int d = 0; d < 4; ++d) u[d] = rng.normal();
      slots[k].x = joint.from_standard_normal(u);
      guarded(errors[k], [&] {
        const SimOutput s = sim.run(slots[k].x, rng);
        slots[k].edp = s.edp;
        slots[k].pga = s.pga;
        slots[k].sa = s.sa;
        slots[k].arias = s.arias;
      });
    });
    std::vector<io::PoolRow> rows;
    std::vector<Failure> fails;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (errors[k].empty())
        rows.push_back(slots[k]);
      else
        fails.push_back({begin + k, errors[k]});
    }
    // Rows first, failures last: the failure file marks the chunk complete.
    io::write_pool_csv(rows_path, rows);
    write_failures(fail_path, fails);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    out.failures.insert(out.failures.end(), fails.begin(), fails.end());
    say(log, "pool: chunk " + std::to_string(c + 1) + "/" + std::to_string(chunks) + " done (" +
                 std::to_string(fails.size()) + " failures)");
  }

  io::write_pool_csv(cfg.out() / "pool.csv", out.rows);
  write_failures(cfg.out() / "pool_failures.csv", out.failures);
  json meta = {{"rows", out.rows.size()},
               {"failures", out.failures.size()},
               {"chunks", chunks},
               {"chunks_reused", reused},
               {"master_seed", cfg.master_seed},
               {"seconds", seconds_since(t0)},
               {"fundamental_period", sim.sa_period()}};
  for (double t : cfg.thresholds) {
    std::size_t above = 0;
    for (const auto& r : out.rows) above += r.edp > t ? 1 : 0;
    meta["exceedance"][io::format_double(t)] =
        out.rows.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(out.rows.size());
  }
  write_json(cfg.out() / "pool_meta.json", meta);
  return out;
}

std::vector<io::PoolRow> load_pool(const StudyConfig& cfg) {
  const fs::path p = cfg.out() / "pool.csv";
  if (!fs::exists(p)) throw DomainError("no pool at " + p.string() + "; run the pool subcommand first");
  return io::read_pool_csv(p);
}

double pool_log_variance(const std::vector<io::PoolRow>& pool) {
  std::vector<double> l;
  l.reserve(pool.size());
  for (const auto& r : pool) l.push_back(std::log(r.edp));
  return metrics::population_variance(l);
}

// ---------------------------------------------------------------------------
// Reference bundle

namespace {

ReferenceData assemble_reference(std::vector<gm::GroundMotionParams> points,
                                 std::vector<std::vector<double>> edps, double pool_variance) {
  ReferenceData ref;
  ref.bundle.points = std::move(points);
  ref.bundle.pool_variance = pool_variance;
  for (std::size_t i = 0; i < edps.size(); ++i) {
    if (edps[i].empty()) throw DomainError("reference: every replication failed at point " + std::to_string(i));
    std::vector<double> logs;
    for (double y : edps[i]) logs.push_back(std::log(y));
    ref.bundle.references.emplace_back(std::move(logs));
  }
  ref.edps = std::move(edps);
  ref.bundle.validate();
  return ref;
}

}  // namespace

ReferenceData build_reference(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                              std::ostream* log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Simulator sim(cfg);
  Rng point_rng(derive_seed(cfg.master_seed, Stream::validation_points));
  const auto points = gm::sample_params(gm::ParamsJointModel::table1(), cfg.validation_points, point_rng);
  const std::size_t reps = cfg.replications_per_point;
  std::vector<double> slot(points.size() * reps, 0.0);
  std::vector<std::string> errors(slot.size());
  parallel_for(slot.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t i = k / reps, r = k % reps;
    Rng rng(derive_seed(cfg.master_seed, Stream::replication, i, r));
    guarded(errors[k], [&] { slot[k] = sim.run(points[i], rng).edp; });
    if (r + 1 == reps && (i + 1) % 10 == 0)
      say(log, "reference: point " + std::to_string(i + 1) + "/" + std::to_string(points.size()));
  });

  std::vector<std::vector<double>> edps(points.size());
  io::CsvTable t, ft;
  t.header = {"point", "replication", "edp"};
  ft.header = {"point", "replication", "message"};
  std::vector<Failure> failures;
  for (std::size_t k = 0; k < slot.size(); ++k) {
    const std::size_t i = k / reps, r = k % reps;
    if (!errors[k].empty()) {
      failures.push_back({k, errors[k]});
      ft.rows.push_back({std::to_string(i), std::to_string(r), clean_message(errors[k])});
      continue;
    }
    edps[i].push_back(slot[k]);
    t.rows.push_back({std::to_string(i), std::to_string(r), io::format_double(slot[k])});
  }
  io::write_params_csv(cfg.out() / "reference_points.csv", points);
  io::write_csv(cfg.out() / "reference.csv", t);
  io::write_csv(cfg.out() / "reference_failures.csv", ft);
  ReferenceData ref = assemble_reference(points, std::move(edps), pool_log_variance(pool));
  ref.failures = std::move(failures);
  write_json(cfg.out() / "reference_meta.json",
             {{"points", points.size()},
              {"replications_per_point", reps},
              {"failures", ref.failures.size()},
              {"pool_variance", ref.bundle.pool_variance},
              {"seconds", seconds_since(t0)}});
  return ref;
}

ReferenceData load_reference(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool) {
  const fs::path pp = cfg.out() / "reference_points.csv", rp = cfg.out() / "reference.csv";
  if (!fs::exists(pp) || !fs::exists(rp))
    throw DomainError("no reference bundle in " + cfg.output_dir + "; run the reference subcommand first");
  auto points = io::read_params_csv(pp);
  const io::CsvTable t = io::read_csv(rp);
  std::vector<std::vector<double>> edps(points.size());
  for (const auto& r : t.rows) {
    const std::size_t i = std::stoull(r[t.column("point")]);
    if (i >= points.size()) throw DomainError("reference.csv: point index out of range");
    edps[i].push_back(io::parse_double(r[t.column("edp")]));
  }
  return assemble_reference(std::move(points), std::move(edps), pool_log_variance(pool));
}

// ---------------------------------------------------------------------------
// Data sets and models

spce::Dataset make_dataset(const std::vector<io::PoolRow>& rows) {
  spce::Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(rows.size()), 4);
  d.outputs.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    d.inputs.row(k) << rows[i].x.ia, rows[i].x.t_mid, rows[i].x.d595, rows[i].x.omega_g;
    d.outputs[k] = rows[i].edp;
  }
  return d;
}

spce::Dataset make_im_dataset(const std::vector<io::PoolRow>& rows, const std::string& im) {
  if (im != "pga" && im != "sa") throw DomainError("unknown intensity measure '" + im + "' (expected pga or sa)");
  spce::Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(rows.size()), 1);
  d.outputs.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    d.inputs(k, 0) = im == "pga" ? rows[i].pga : rows[i].sa;
    d.outputs[k] = rows[i].edp;
  }
  return d;
}

std::vector<io::PoolRow> subsample(const std::vector<io::PoolRow>& pool, std::size_t n, std::uint64_t seed) {
  if (n > pool.size()) throw DomainError("subsample: requested more rows than the pool holds");
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
  std::vector<io::PoolRow> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = pool[idx[i]];
  return out;
}

io::AnyModel fit_model(const std::string& kind, const spce::Dataset& data, const StudyConfig& cfg,
                       std::uint64_t seed, double delta0) {
  if (kind == "spce") {
    spce::FitConfig fc;
    fc.nq = cfg.spce.nq;
    fc.degree_grid = cfg.spce.degree_grid;
    fc.q_grid = cfg.spce.q_grid;
    fc.sigma_grid = cfg.spce.sigma_grid;
    fc.folds = cfg.spce.folds;
    fc.restarts = cfg.spce.restarts;
    fc.cv_restarts = cfg.spce.cv_restarts;
    fc.max_iterations = cfg.spce.max_iterations;
    fc.seed = seed;
    fc.threads = 1;
    if (data.dims() == 4)
      fc.transform = transforms::InputTransform::from_joint(gm::ParamsJointModel::table1());
    return spce::fit(data, fc);
  }
  if (kind == "lm") return baselines::lm_fit(data);
  if (kind == "probit") return baselines::probit_fit(data, delta0);
  if (kind == "kcde") {
    baselines::KcdeOptions ko;
    ko.folds = cfg.kcde.folds;
    ko.max_eval_points = cfg.kcde.max_eval_points;
    ko.y_grid_points = cfg.kcde.y_grid_points;
    ko.max_cv_train = cfg.kcde.max_cv_train;
    ko.seed = seed;
    return baselines::kcde_fit(data, ko);
  }
  throw DomainError("unknown model kind '" + kind + "'");
}

double model_fragility(const io::AnyModel& model, const Eigen::VectorXd& x, double delta0) {
  struct Visitor {
    const Eigen::VectorXd& x;
    double d;
    double operator()(const spce::SpceModel& m) const { return spce::fragility(m, x, d); }
    double operator()(const baselines::LinearModel& m) const { return baselines::lm_fragility(m, x, d); }
    double operator()(const baselines::ProbitModel& m) const { return baselines::probit_fragility(m, x); }
    double operator()(const baselines::KcdeModel& m) const { return baselines::kcde_fragility(m, x, d); }
  };
  return std::visit(Visitor{x, delta0}, model);
}

std::vector<double> model_sample(const io::AnyModel& model, const Eigen::VectorXd& x, std::size_t n,
                                 Rng& rng) {
  struct Visitor {
    const Eigen::VectorXd& x;
    std::size_t n;
    Rng& rng;
    std::vector<double> operator()(const spce::SpceModel& m) const { return spce::sample_conditional(m, x, n, rng); }
    std::vector<double> operator()(const baselines::LinearModel& m) const {
      return baselines::lm_sample_conditional(m, x, n, rng);
    }
    std::vector<double> operator()(const baselines::ProbitModel&) const {
      throw DomainError("the probit classifier does not allow resampling the EDP");
    }
    std::vector<double> operator()(const baselines::KcdeModel& m) const {
      return baselines::kcde_sample_conditional(m, x, n, rng);
    }
  };
  return std::visit(Visitor{x, n, rng}, model);
}

namespace {

Eigen::VectorXd as_vector(const gm::GroundMotionParams& x) {
  Eigen::VectorXd v(4);
  v << x.ia, x.t_mid, x.d595, x.omega_g;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Convergence study

std::string threshold_metric(double delta0) { return "eps_p_" + io::format_double(delta0); }

ConvergenceResult run_convergence(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                                  const ReferenceData& ref, std::ostream* log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto& bundle = ref.bundle;
  const std::size_t np = bundle.points.size();
  std::vector<Eigen::VectorXd> xs;
  for (const auto& p : bundle.points) xs.push_back(as_vector(p));

  std::vector<std::vector<double>> p_ref(cfg.thresholds.size(), std::vector<double>(np));
  for (std::size_t t = 0; t < cfg.thresholds.size(); ++t)
    for (std::size_t i = 0; i < np; ++i) p_ref[t][i] = bundle.references[i].exceedance(std::log(cfg.thresholds[t]));

  struct Cell {
    std::string model;
    std::size_t n, rep;
    std::vector<io::ResultRow> rows;
    std::vector<CellFailure> failures;
    double seconds = 0.0;
  };
  std::vector<Cell> cells;
  for (const auto& m : cfg.models)
    for (std::size_t n : cfg.sample_sizes)
      for (std::size_t r = 0; r < cfg.repetitions; ++r) cells.push_back({m, n, r, {}, {}, 0.0});

  const double nan = std::numeric_limits<double>::quiet_NaN();
  parallel_for(cells.size(), cfg.threads, [&](std::size_t c) {
    Cell& cell = cells[c];
    const auto tc = std::chrono::steady_clock::now();
    const spce::Dataset data =
        make_dataset(subsample(pool, cell.n, derive_seed(cfg.master_seed, Stream::subsample, cell.rep, cell.n)));
    const std::uint64_t fit_seed = derive_seed(cfg.master_seed, Stream::fit, cell.rep, cell.n);
    auto record = [&](const std::string& metric, double value, const std::string& error) {
      cell.rows.push_back({cell.model, cell.n, cell.rep, metric, error.empty() ? value : nan});
      if (!error.empty()) cell.failures.push_back({cell.model, cell.n, cell.rep, metric, clean_message(error)});
    };

    if (cell.model == "probit") {
      for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
        std::string error;
        double value = nan;
        guarded(error, [&] {
          const io::AnyModel m = fit_model("probit", data, cfg, fit_seed, cfg.thresholds[t]);
          std::vector<double> p(np);
          for (std::size_t i = 0; i < np; ++i) p[i] = model_fragility(m, xs[i], cfg.thresholds[t]);
          value = metrics::fragility_rel_mse(p_ref[t], p);
        });
        record(threshold_metric(cfg.thresholds[t]), value, error);
      }
    } else {
      std::string fit_error;
      std::optional<io::AnyModel> model;
      guarded(fit_error, [&] { model = fit_model(cell.model, data, cfg, fit_seed); });
      std::string error = fit_error;
      double ws = nan;
      if (model) {
        guarded(error, [&] {
          const metrics::LogSampler sampler = [&](std::size_t i, std::size_t n, Rng& rng) {
            std::vector<double> y = model_sample(*model, xs[i], n, rng);
            for (double& v : y) v = std::log(v);
            return y;
          };
          ws = metrics::normalized_ws_error(sampler, bundle, cfg.n_surrogate,
                                            derive_seed(cfg.master_seed, Stream::surrogate, cell.rep, cell.n), 1);
        });
      }
      record("ws_error", ws, error);
      for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
        std::string terr = fit_error;
        double value = nan;
        if (model) {
          guarded(terr, [&] {
            std::vector<double> p(np);
            for (std::size_t i = 0; i < np; ++i) p[i] = model_fragility(*model, xs[i], cfg.thresholds[t]);
            value = metrics::fragility_rel_mse(p_ref[t], p);
          });
        }
        record(threshold_metric(cfg.thresholds[t]), value, terr);
      }
    }
    cell.seconds = seconds_since(tc);
    say(log, "converge: " + cell.model + " N=" + std::to_string(cell.n) + " rep=" + std::to_string(cell.rep) +
                 " done");
  });

  ConvergenceResult out;
  json timings = json::array();
  for (auto& cell : cells) {
    out.rows.insert(out.rows.end(), cell.rows.begin(), cell.rows.end());
    out.failures.insert(out.failures.end(), cell.failures.begin(), cell.failures.end());
    timings.push_back({{"model", cell.model}, {"N", cell.n}, {"repetition", cell.rep}, {"seconds", cell.seconds}});
  }
  io::write_results_csv(cfg.out() / "results.csv", out.rows);
  io::CsvTable ft;
  ft.header = {"model", "N", "repetition", "metric", "message"};
  for (const auto& f : out.failures)
    ft.rows.push_back({f.model, std::to_string(f.n), std::to_string(f.repetition), f.metric, f.message});
  io::write_csv(cfg.out() / "failures.csv", ft);
  write_json(cfg.out() / "converge_meta.json",
             {{"master_seed", cfg.master_seed},
              {"models", cfg.models},
              {"sample_sizes", cfg.sample_sizes},
              {"repetitions", cfg.repetitions},
              {"failures", out.failures.size()},
              {"seconds", seconds_since(t0)},
              {"cells", timings}});

  std::vector<std::string> metric_names{"ws_error"};
  for (double t : cfg.thresholds) metric_names.push_back(threshold_metric(t));
  for (const auto& metric : metric_names) {
    std::vector<plot::BoxGroup> groups;
    for (std::size_t n : cfg.sample_sizes)
      for (const auto& m : cfg.models) {
        plot::BoxGroup g{std::to_string(n), m, {}};
        for (const auto& r : out.rows)
          if (r.model == m && r.n == n && r.metric == metric) g.values.push_back(r.value);
        if (!g.values.empty()) groups.push_back(std::move(g));
      }
    if (!groups.empty())
      plot::write_box_plot(cfg.out() / ("convergence_" + metric + ".svg"),
                           {metric + " by sample size", "N", metric, false, true}, groups);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CCDF study

CcdfTable run_ccdf(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool, const io::AnyModel* given,
                   std::ostream* log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<io::AnyModel> fitted;
  if (!given) {
    const auto data = make_dataset(subsample(pool, cfg.ccdf.fit_size, derive_seed(cfg.master_seed, Stream::ccdf, 0)));
    fitted = fit_model(cfg.ccdf.model, data, cfg, derive_seed(cfg.master_seed, Stream::ccdf, 1));
    say(log, "ccdf: fitted " + cfg.ccdf.model + " on " + std::to_string(cfg.ccdf.fit_size) + " samples");
  }
  const io::AnyModel& model = given ? *given : *fitted;
  if (std::holds_alternative<baselines::ProbitModel>(model))
    throw DomainError("ccdf: the probit classifier does not allow resampling the EDP");

  const gm::ParamsJointModel joint = gm::ParamsJointModel::table1();
  Rng rng(derive_seed(cfg.master_seed, Stream::ccdf, 2));
  std::vector<double> draws(cfg.ccdf.draws);
  Eigen::Vector4d u;
  for (auto& y : draws) {
    for (int d = 0; d < 4; ++d) u[d] = rng.normal();
    y = model_sample(model, as_vector(joint.from_standard_normal(u)), 1, rng)[0];
  }
  std::vector<double> edps;
  for (const auto& r : pool) edps.push_back(r.edp);

  CcdfTable t;
  t.kind = io::model_kind(model);
  t.delta = log_space(cfg.ccdf.delta_min, cfg.ccdf.delta_max, cfg.ccdf.grid_points);
  t.pool = metrics::empirical_ccdf(edps, t.delta);
  t.model = metrics::empirical_ccdf(draws, t.delta);

  io::CsvTable csv;
  csv.header = {"delta", "pool", t.kind};
  for (std::size_t k = 0; k < t.delta.size(); ++k)
    csv.rows.push_back({io::format_double(t.delta[k]), io::format_double(t.pool[k]), io::format_double(t.model[k])});
  io::write_csv(cfg.out() / "ccdf.csv", csv);
  io::save_model(cfg.out() / "ccdf_model.json", model);
  write_json(cfg.out() / "ccdf_meta.json", {{"model", t.kind}, {"draws", draws.size()}, {"seconds", seconds_since(t0)}});
  plot::write_line_plot(cfg.out() / "ccdf.svg", {"CCDF of the maximum interstory drift", "delta [m]", "P(Y >= delta)", true, true},
                        {{"pool", t.delta, t.pool}, {t.kind, t.delta, t.model}});
  return t;
}

// ---------------------------------------------------------------------------
// Classical-IM fragility curves

ClassicalResult run_classical_im(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                                 const std::string& im, std::ostream* log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t im_id = im == "sa" ? 1 : 0;
  const spce::Dataset full = make_im_dataset(pool, im);
  const spce::Dataset data =
      make_im_dataset(subsample(pool, cfg.classical.sample_size, derive_seed(cfg.master_seed, Stream::classical, im_id, 0)), im);

  std::vector<double> values(full.inputs.data(), full.inputs.data() + full.inputs.rows());
  std::sort(values.begin(), values.end());
  const double lo = values[static_cast<std::size_t>(0.01 * static_cast<double>(values.size() - 1))];
  const double hi = values[static_cast<std::size_t>(0.99 * static_cast<double>(values.size() - 1))];
  const std::vector<double> grid = log_space(lo, hi, cfg.classical.curve_points);

  ClassicalResult out;
  std::vector<std::pair<std::string, io::AnyModel>> models;
  models.emplace_back("reference", fit_model("kcde", full, cfg, derive_seed(cfg.master_seed, Stream::classical, im_id, 1)));
  say(log, "classical-im: reference KCDE fitted on " + std::to_string(full.size()) + " samples");
  for (const auto& kind : cfg.models) {
    if (kind == "probit") continue;
    std::string error;
    guarded(error, [&] {
      models.emplace_back(kind, fit_model(kind, data, cfg, derive_seed(cfg.master_seed, Stream::classical, im_id, 2)));
    });
    if (!error.empty())
      for (double t : cfg.thresholds) out.flags.push_back({kind, data.size(), 0, io::format_double(t), clean_message(error)});
  }

  Eigen::VectorXd x(1);
  for (double t : cfg.thresholds) {
    std::vector<std::pair<std::string, const io::AnyModel*>> curves;
    for (const auto& [name, m] : models) curves.emplace_back(name, &m);
    std::optional<io::AnyModel> probit;
    if (cfg.model_enabled("probit")) {
      std::string error;
      guarded(error, [&] { probit = fit_model("probit", data, cfg, 0, t); });
      if (probit)
        curves.emplace_back("probit", &*probit);
      else
        out.flags.push_back({"probit", data.size(), 0, io::format_double(t), clean_message(error)});
    }
    std::vector<plot::Series> series;
    for (const auto& [name, m] : curves) {
      plot::Series s{name, grid, {}};
      for (double v : grid) {
        x[0] = v;
        const double p = model_fragility(*m, x, t);
        out.curves.push_back({t, name, v, p});
        s.y.push_back(p);
      }
      series.push_back(std::move(s));
    }
    plot::write_line_plot(cfg.out() / ("classical_" + im + "_" + io::format_double(t) + ".svg"),
                          {"Fragility curves, delta0 = " + io::format_double(t) + " m", im + " [g]", "P(Y > delta0)", true, false},
                          series);
  }

  io::CsvTable csv;
  csv.header = {"threshold", "model", "im", "p_f"};
  for (const auto& c : out.curves)
    csv.rows.push_back({io::format_double(c.threshold), c.model, io::format_double(c.im), io::format_double(c.p_f)});
  io::write_csv(cfg.out() / ("classical_" + im + ".csv"), csv);
  io::CsvTable flags;
  flags.header = {"threshold", "model", "message"};
  for (const auto& f : out.flags) flags.rows.push_back({f.metric, f.model, f.message});
  io::write_csv(cfg.out() / ("classical_" + im + "_flags.csv"), flags);
  write_json(cfg.out() / ("classical_" + im + "_meta.json"),
             {{"im", im}, {"sample_size", data.size()}, {"reference_size", full.size()}, {"seconds", seconds_since(t0)}});
  return out;
}

// ---------------------------------------------------------------------------
// Fragility surface

SurfaceResult run_fragility_surface(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool, std::ostream* log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const gm::ParamsJointModel joint = gm::ParamsJointModel::table1();
  const auto data = make_dataset(subsample(pool, cfg.surface.fit_size, derive_seed(cfg.master_seed, Stream::surface, 0)));
  const io::AnyModel fitted = fit_model("spce", data, cfg, derive_seed(cfg.master_seed, Stream::surface, 1));
  const auto& model = std::get<spce::SpceModel>(fitted);
  say(log, "fragility-surface: SPCE fitted on " + std::to_string(data.size()) + " samples");

  SurfaceResult out;
  out.ia_grid = cfg.surface.ia_grid;
  out.omega_grid = cfg.surface.omega_grid;
  const std::uint64_t crn_seed = derive_seed(cfg.master_seed, Stream::surface, 2);
  for (double t : cfg.thresholds) {
    Rng rng(crn_seed);
    out.surfaces.push_back(
        spce::averaged_fragility_surface(model, joint, out.ia_grid, out.omega_grid, t, cfg.surface.n_nuisance, rng));
  }

  // Replicated simulator references at the validation points.
  const Simulator sim(cfg);
  std::vector<std::pair<double, double>> vpts;
  for (double ia : cfg.surface.validation_ia)
    for (double w : cfg.surface.validation_omega) vpts.emplace_back(ia, w);
  const std::size_t reps = cfg.surface.replications;
  std::vector<double> edp(vpts.size() * reps, 0.0);
  std::vector<std::string> errors(edp.size());
  parallel_for(edp.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t p = k / reps, r = k % reps;
    Rng rng(derive_seed(cfg.master_seed, Stream::surface_reference, p, r));
    const auto x = spce::sample_nuisance(joint, vpts[p].first, vpts[p].second, 1, rng)[0];
    guarded(errors[k], [&] { edp[k] = sim.run(x, rng).edp; });
  });
  say(log, "fragility-surface: validation replications done");

  for (std::size_t ti = 0; ti < cfg.thresholds.size(); ++ti) {
    const double t = cfg.thresholds[ti];
    double mae = 0.0;
    for (std::size_t p = 0; p < vpts.size(); ++p) {
      std::size_t ok = 0, above = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        if (!errors[p * reps + r].empty()) continue;
        ++ok;
        above += edp[p * reps + r] > t ? 1 : 0;
      }
      if (ok == 0) throw SolverError("fragility-surface: every replication failed at a validation point", 0.0);
      Rng rng(crn_seed);
      const double pm = spce::averaged_fragility_surface(model, joint, {vpts[p].first}, {vpts[p].second}, t,
                                                         cfg.surface.n_nuisance, rng)(0, 0);
      const double pr = static_cast<double>(above) / static_cast<double>(ok);
      out.validation.push_back({t, vpts[p].first, vpts[p].second, pr, pm});
      mae += std::abs(pr - pm);
    }
    out.mean_abs_error.push_back(vpts.empty() ? 0.0 : mae / static_cast<double>(vpts.size()));
  }

  io::CsvTable csv;
  csv.header = {"threshold", "ia", "omega_g", "p_f"};
  for (std::size_t ti = 0; ti < cfg.thresholds.size(); ++ti)
    for (std::size_t a = 0; a < out.ia_grid.size(); ++a)
      for (std::size_t w = 0; w < out.omega_grid.size(); ++w)
        csv.rows.push_back({io::format_double(cfg.thresholds[ti]), io::format_double(out.ia_grid[a]),
                            io::format_double(out.omega_grid[w]),
                            io::format_double(out.surfaces[ti](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(w)))});
  io::write_csv(cfg.out() / "surface.csv", csv);
  io::CsvTable val;
  val.header = {"threshold", "ia", "omega_g", "reference", "model", "abs_error"};
  for (const auto& v : out.validation)
    val.rows.push_back({io::format_double(v.threshold), io::format_double(v.ia), io::format_double(v.omega_g),
                        io::format_double(v.reference), io::format_double(v.model),
                        io::format_double(std::abs(v.reference - v.model))});
  io::write_csv(cfg.out() / "surface_validation.csv", val);
  io::save_model(cfg.out() / "surface_model.json", fitted);
  json mae = json::object();
  for (std::size_t ti = 0; ti < cfg.thresholds.size(); ++ti) mae[io::format_double(cfg.thresholds[ti])] = out.mean_abs_error[ti];
  write_json(cfg.out() / "surface_meta.json", {{"mean_abs_error", mae}, {"fit_size", data.size()}, {"seconds", seconds_since(t0)}});

  for (std::size_t ti = 0; ti < cfg.thresholds.size(); ++ti) {
    std::vector<plot::Series> series;
    for (std::size_t w = 0; w < out.omega_grid.size(); w += std::max<std::size_t>(1, out.omega_grid.size() / 4)) {
      plot::Series s{"omega_g = " + io::format_double(out.omega_grid[w]), out.ia_grid, {}};
      for (std::size_t a = 0; a < out.ia_grid.size(); ++a)
        s.y.push_back(out.surfaces[ti](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(w)));
      series.push_back(std::move(s));
    }
    plot::write_line_plot(cfg.out() / ("surface_" + io::format_double(cfg.thresholds[ti]) + ".svg"),
                          {"Averaged fragility, delta0 = " + io::format_double(cfg.thresholds[ti]) + " m", "ia [g^2 s]",
                           "P(Y > delta0)", true, false},
                          series);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Record export

void export_motions(const StudyConfig& cfg, std::size_t n, std::ostream* log) {
  cfg.validate();
  if (n < 1) throw DomainError("export_motions: n must be at least 1");
  const gm::ParamsJointModel joint = gm::ParamsJointModel::table1();
  std::vector<gm::GroundMotionParams> xs(n);
  std::vector<gm::AccelTimeSeries> motions(n);
  std::vector<std::uint64_t> seeds(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    seeds[i] = derive_seed(cfg.master_seed, Stream::pool, i);
    Rng rng(seeds[i]);
    Eigen::Vector4d u;
    for (int d = 0; d < 4; ++d) u[d] = rng.normal();
    xs[i] = joint.from_standard_normal(u);
    motions[i] = gm::synthesize(xs[i], cfg.synthesis, rng);
  });
  io::write_params_csv(cfg.out() / "params.csv", xs);
  io::write_motion_batch(cfg.out() / "motions.csv", cfg.out() / "motions.json", motions, xs, seeds, cfg.synthesis);
  structure::IntegrationOptions opt;
  opt.substeps = cfg.substeps;
  io::write_response_csv(cfg.out() / "response.csv",
                         structure::integrate(structure::ShearFrameModel::table2(), motions[0], opt));
  say(log, "simulate: wrote " + std::to_string(n) + " records");
}

}  // namespace seisfrag::study
