#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "seisfrag/common.hpp"
#include "seisfrag/random.hpp"
#include "seisfrag/serialization.hpp"
#include "seisfrag/study.hpp"

namespace {

using namespace seisfrag;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string profile;
  std::string out;
  std::optional<int> threads;
};

study::StudyConfig resolve(const GlobalFlags& g) {
  study::StudyConfig cfg = study::StudyConfig::for_profile(g.profile.empty() ? "desk" : g.profile);
  if (!g.config.empty()) {
    study::apply_config_file(cfg, g.config);
    if (!g.profile.empty() && cfg.profile != g.profile)
      throw DomainError("--profile " + g.profile + " conflicts with profile '" + cfg.profile + "' in " + g.config);
  }
  if (g.seed) cfg.master_seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

void print_counts(const char* what, std::size_t ok, std::size_t failed) {
  std::cout << what << ": " << ok << " rows, " << failed << " failures\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seismic fragility with stochastic polynomial chaos expansions"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--profile", g.profile, "study profile")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  auto* pool = app.add_subcommand("pool", "simulate the data pool (resumable by chunk)");
  auto* reference = app.add_subcommand("reference", "simulate the replicated validation bundle");
  auto* converge = app.add_subcommand("converge", "run the convergence study over N and repetitions");
  auto* ccdf = app.add_subcommand("ccdf", "compare surrogate and pool CCDFs of the EDP");
  std::string model_path;
  ccdf->add_option("--model", model_path, "fitted model JSON (default: fit ccdf.model)")->check(CLI::ExistingFile);
  auto* classical = app.add_subcommand("classical-im", "fragility curves against PGA or SA");
  std::string im = "pga";
  classical->add_option("--im", im, "intensity measure")->check(CLI::IsMember({"pga", "sa"}));
  auto* surface = app.add_subcommand("fragility-surface", "averaged fragility surface over (ia, omega_g)");
  auto* show = app.add_subcommand("show-config", "print the resolved configuration");
  auto* fit = app.add_subcommand("fit", "fit one model on a pool subsample and save it as JSON");
  std::string kind = "spce", fit_out;
  std::size_t fit_n = 1000;
  double fit_delta = 0.07;
  fit->add_option("--kind", kind, "model kind")->check(CLI::IsMember({"spce", "lm", "probit", "kcde"}));
  fit->add_option("-n,--samples", fit_n, "subsample size")->check(CLI::PositiveNumber);
  fit->add_option("--threshold", fit_delta, "probit threshold [m]")->check(CLI::PositiveNumber);
  fit->add_option("--model-out", fit_out, "output path (default <out>/model_<kind>.json)");
  auto* simulate = app.add_subcommand("simulate", "export synthetic records, parameters and one response history");
  std::size_t sim_n = 10;
  simulate->add_option("-n,--records", sim_n, "number of records")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const study::StudyConfig cfg = resolve(g);
    std::ostream* log = &std::cerr;
    if (*show) {
      std::cout << study::config_to_json(cfg) << '\n';
    } else if (*pool) {
      const auto res = study::build_pool(cfg, log);
      print_counts("pool", res.rows.size(), res.failures.size());
    } else if (*reference) {
      const auto res = study::build_reference(cfg, study::load_pool(cfg), log);
      print_counts("reference", res.bundle.points.size() * cfg.replications_per_point - res.failures.size(),
                   res.failures.size());
    } else if (*converge) {
      const auto p = study::load_pool(cfg);
      const auto res = study::run_convergence(cfg, p, study::load_reference(cfg, p), log);
      print_counts("converge", res.rows.size(), res.failures.size());
    } else if (*ccdf) {
      const auto p = study::load_pool(cfg);
      std::optional<io::AnyModel> m;
      if (!model_path.empty()) m = io::load_model(model_path);
      const auto t = study::run_ccdf(cfg, p, m ? &*m : nullptr, log);
      std::cout << "ccdf: " << t.delta.size() << " grid points (" << t.kind << ")\n";
    } else if (*classical) {
      const auto res = study::run_classical_im(cfg, study::load_pool(cfg), im, log);
      std::cout << "classical-im: " << res.curves.size() << " curve points, " << res.flags.size()
                << " flagged fits\n";
    } else if (*surface) {
      const auto res = study::run_fragility_surface(cfg, study::load_pool(cfg), log);
      for (std::size_t i = 0; i < cfg.thresholds.size(); ++i)
        std::cout << "fragility-surface: delta0 = " << cfg.thresholds[i]
                  << " m, validation MAE = " << res.mean_abs_error[i] << '\n';
    } else if (*fit) {
      const auto p = study::load_pool(cfg);
      if (fit_n > p.size()) throw DomainError("fit: --samples exceeds the pool size");
      const auto data = study::make_dataset(
          study::subsample(p, fit_n, derive_seed(cfg.master_seed, Stream::subsample, 0xf17, fit_n)));
      const auto m = study::fit_model(kind, data, cfg, derive_seed(cfg.master_seed, Stream::fit, 0xf17, fit_n), fit_delta);
      const std::string path = fit_out.empty() ? (cfg.out() / ("model_" + kind + ".json")).string() : fit_out;
      io::save_model(path, m);
      std::cout << "fit: wrote " << path << '\n';
    } else if (*simulate) {
      study::export_motions(cfg, sim_n, log);
    }
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
