#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seisfrag/gm_model.hpp"
#include "seisfrag/structural_dynamics.hpp"

namespace seisfrag::io {

/// Shortest decimal text that reads back to the same double ("nan", "inf" for specials).
std::string format_double(double v);
double parse_double(const std::string& s);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

/// Header plus rows of text cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// One simulated sample of the data pool.
struct PoolRow {
  gm::GroundMotionParams x;
  double edp = 0.0;
  double pga = 0.0;
  double sa = 0.0;
  double arias = 0.0;
};

/// Columns ia,t_mid,d595,omega_g,edp,pga,sa,arias.
void write_pool_csv(const std::filesystem::path& path, const std::vector<PoolRow>& rows);
std::vector<PoolRow> read_pool_csv(const std::filesystem::path& path);

/// Columns model,N,repetition,metric,value.
struct ResultRow {
  std::string model;
  std::size_t n = 0;
  std::size_t repetition = 0;
  std::string metric;
  double value = 0.0;
};
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Columns ia,t_mid,d595,omega_g.
void write_params_csv(const std::filesystem::path& path, const std::vector<gm::GroundMotionParams>& xs);
std::vector<gm::GroundMotionParams> read_params_csv(const std::filesystem::path& path);

/// Ground-motion batch: one row dt,n,v_0..v_{n-1} per record, plus a JSON
/// sidecar with the parameters, seeds and synthesis settings.
void write_motion_batch(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                        const std::vector<gm::AccelTimeSeries>& motions,
                        const std::vector<gm::GroundMotionParams>& params,
                        const std::vector<std::uint64_t>& seeds, const gm::SynthesisConfig& cfg);
std::vector<gm::AccelTimeSeries> read_motion_batch(const std::filesystem::path& csv_path);

/// Response dump t,v1..vS,z1..zS.
void write_response_csv(const std::filesystem::path& path, const structure::ResponseRecord& r);

}  // namespace seisfrag::io
