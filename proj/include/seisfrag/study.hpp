#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "seisfrag/csv.hpp"
#include "seisfrag/gm_model.hpp"
#include "seisfrag/metrics.hpp"
#include "seisfrag/serialization.hpp"
#include "seisfrag/structural_dynamics.hpp"

namespace seisfrag::study {

struct SpceSettings {
  std::size_t nq = 32;
  std::vector<int> degree_grid{1, 2, 3};
  std::vector<double> q_grid{0.75, 1.0};
  std::vector<double> sigma_grid = spce::FitConfig::default_sigma_grid();
  std::size_t folds = 5;
  int restarts = 3;
  int cv_restarts = 1;
  int max_iterations = 400;
};

struct KcdeSettings {
  std::size_t folds = 5;
  std::size_t max_eval_points = 400;
  std::size_t y_grid_points = 25;
  std::size_t max_cv_train = 5000;
};

struct CcdfSettings {
  std::string model = "spce";
  std::size_t fit_size = 1000;
  std::size_t draws = 100000;
  double delta_min = 1e-3;
  double delta_max = 0.2;
  std::size_t grid_points = 60;
};

struct ClassicalSettings {
  std::size_t sample_size = 1000;
  double sa_damping = 0.02;
  std::size_t curve_points = 60;
};

struct SurfaceSettings {
  std::size_t fit_size = 1000;
  std::vector<double> ia_grid;
  std::vector<double> omega_grid;
  std::size_t n_nuisance = 2000;
  std::vector<double> validation_ia{0.02, 0.06, 0.1};
  std::vector<double> validation_omega{2.0, 6.0, 10.0};
  std::size_t replications = 100;
};

struct StudyConfig {
  std::string profile = "desk";
  std::size_t pool_size = 10000;
  std::vector<std::size_t> sample_sizes{250, 1000, 4000};
  std::size_t repetitions = 5;
  std::size_t validation_points = 100;
  std::size_t replications_per_point = 100;
  std::vector<double> thresholds{0.02, 0.07};
  std::uint64_t master_seed = 20210901;
  std::vector<std::string> models{"spce", "lm", "probit", "kcde"};
  std::string output_dir = "out";
  int threads = 1;
  std::size_t n_surrogate = 10000;
  std::size_t chunk_size = 1000;
  int substeps = 10;
  gm::SynthesisConfig synthesis;
  SpceSettings spce;
  KcdeSettings kcde;
  CcdfSettings ccdf;
  ClassicalSettings classical;
  SurfaceSettings surface;

  static StudyConfig desk();
  static StudyConfig paper();
  /// "desk" or "paper"; throws DomainError otherwise.
  static StudyConfig for_profile(const std::string& name);

  /// Throws DomainError naming the offending field.
  void validate() const;
  bool model_enabled(const std::string& kind) const;
  std::filesystem::path out() const { return output_dir; }
};

/// Resolved configuration as JSON (the show-config output).
std::string config_to_json(const StudyConfig& cfg);
/// Overlays a JSON document on cfg. Unknown keys and type mismatches throw
/// DomainError with the dotted key path.
void apply_config_json(StudyConfig& cfg, const std::string& text);
void apply_config_file(StudyConfig& cfg, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Simulator: ground motion synthesis followed by the Bouc-Wen frame.

struct SimOutput {
  double edp = 0.0;
  double pga = 0.0;
  double sa = 0.0;
  double arias = 0.0;
};

class Simulator {
 public:
  explicit Simulator(const StudyConfig& cfg,
                     structure::ShearFrameModel frame = structure::ShearFrameModel::table2());

  /// Synthesizes one record for x from rng and integrates the frame.
  SimOutput run(const gm::GroundMotionParams& x, Rng& rng) const;

  const structure::ShearFrameModel& frame() const { return frame_; }
  double sa_period() const { return sa_period_; }

 private:
  structure::ShearFrameModel frame_;
  gm::SynthesisConfig synthesis_;
  structure::IntegrationOptions integration_;
  double sa_period_;
  double sa_damping_;
};

// ---------------------------------------------------------------------------
// Pipeline stages. Each writes its CSV outputs under cfg.output_dir plus a
// JSON sidecar with counts and timings.

struct Failure {
  std::size_t index = 0;
  std::string message;
};

struct PoolBuild {
  std::vector<io::PoolRow> rows;
  std::vector<Failure> failures;
};

/// Resumable chunked pool build: finished chunks under pool_chunks/ are reused.
PoolBuild build_pool(const StudyConfig& cfg, std::ostream* log = nullptr);
std::vector<io::PoolRow> load_pool(const StudyConfig& cfg);

struct ReferenceData {
  metrics::ValidationBundle bundle;
  std::vector<std::vector<double>> edps;  ///< raw replications per point
  std::vector<Failure> failures;
};

ReferenceData build_reference(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                              std::ostream* log = nullptr);
ReferenceData load_reference(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool);

/// Population variance of ln EDP over the pool.
double pool_log_variance(const std::vector<io::PoolRow>& pool);

spce::Dataset make_dataset(const std::vector<io::PoolRow>& rows);
/// Single-input data set on "pga" or "sa".
spce::Dataset make_im_dataset(const std::vector<io::PoolRow>& rows, const std::string& im);
/// n distinct rows drawn without replacement from the seeded stream.
std::vector<io::PoolRow> subsample(const std::vector<io::PoolRow>& pool, std::size_t n,
                                   std::uint64_t seed);

/// Fits one model kind. `delta0` is only used by the probit classifier.
io::AnyModel fit_model(const std::string& kind, const spce::Dataset& data, const StudyConfig& cfg,
                       std::uint64_t seed, double delta0 = 0.0);
double model_fragility(const io::AnyModel& model, const Eigen::VectorXd& x, double delta0);
/// Conditional draws of Y; throws DomainError for the probit classifier.
std::vector<double> model_sample(const io::AnyModel& model, const Eigen::VectorXd& x, std::size_t n,
                                 Rng& rng);

struct CellFailure {
  std::string model;
  std::size_t n = 0;
  std::size_t repetition = 0;
  std::string metric;
  std::string message;
};

struct ConvergenceResult {
  std::vector<io::ResultRow> rows;
  std::vector<CellFailure> failures;
};

std::string threshold_metric(double delta0);

ConvergenceResult run_convergence(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                                  const ReferenceData& ref, std::ostream* log = nullptr);

struct CcdfTable {
  std::vector<double> delta;
  std::vector<double> pool;
  std::vector<double> model;
  std::string kind;
};

/// CCDF of unconditional surrogate draws against the pool. Fits cfg.ccdf.model
/// on a subsample unless a model is given.
CcdfTable run_ccdf(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                   const io::AnyModel* model = nullptr, std::ostream* log = nullptr);

struct CurveRow {
  double threshold = 0.0;
  std::string model;
  double im = 0.0;
  double p_f = 0.0;
};

struct ClassicalResult {
  std::vector<CurveRow> curves;
  std::vector<CellFailure> flags;
};

ClassicalResult run_classical_im(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                                 const std::string& im, std::ostream* log = nullptr);

struct SurfaceValidation {
  double threshold = 0.0;
  double ia = 0.0;
  double omega_g = 0.0;
  double reference = 0.0;
  double model = 0.0;
};

struct SurfaceResult {
  std::vector<double> ia_grid;
  std::vector<double> omega_grid;
  std::vector<Eigen::MatrixXd> surfaces;  ///< one per threshold
  std::vector<SurfaceValidation> validation;
  std::vector<double> mean_abs_error;     ///< one per threshold
};

SurfaceResult run_fragility_surface(const StudyConfig& cfg, const std::vector<io::PoolRow>& pool,
                                    std::ostream* log = nullptr);

/// Synthesizes n records at sampled parameters and writes params.csv,
/// motions.csv + motions.json and, for the first record, response.csv.
void export_motions(const StudyConfig& cfg, std::size_t n, std::ostream* log = nullptr);

}  // namespace seisfrag::study
