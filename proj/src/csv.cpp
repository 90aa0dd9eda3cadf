#include "seisfrag/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "seisfrag/common.hpp"

namespace seisfrag::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DomainError("csv: cannot parse number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  std::size_t end = line.size();
  if (end > 0 && line[end - 1] == '\r') --end;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos || comma >= end) {
      cells.push_back(line.substr(start, end - start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DomainError("csv: missing column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DomainError(path.string() + ": empty file");
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
    if (t.rows.back().size() != t.header.size())
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
  }
  return t;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path.string());
  return out;
}

void write_line(std::ofstream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  auto out = open_out(path);
  write_line(out, table.header);
  for (const auto& r : table.rows) write_line(out, r);
}

void write_pool_csv(const std::filesystem::path& path, const std::vector<PoolRow>& rows) {
  CsvTable t;
  t.header = {"ia", "t_mid", "d595", "omega_g", "edp", "pga", "sa", "arias"};
  t.rows.reserve(rows.size());
  for (const auto& r : rows)
    t.rows.push_back({format_double(r.x.ia), format_double(r.x.t_mid), format_double(r.x.d595),
                      format_double(r.x.omega_g), format_double(r.edp), format_double(r.pga),
                      format_double(r.sa), format_double(r.arias)});
  write_csv(path, t);
}

std::vector<PoolRow> read_pool_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c[8] = {t.column("ia"),  t.column("t_mid"), t.column("d595"), t.column("omega_g"),
                            t.column("edp"), t.column("pga"),   t.column("sa"),   t.column("arias")};
  std::vector<PoolRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    PoolRow p;
    p.x = {parse_double(r[c[0]]), parse_double(r[c[1]]), parse_double(r[c[2]]), parse_double(r[c[3]]),
           gm::kDefaultZetaG};
    p.edp = parse_double(r[c[4]]);
    p.pga = parse_double(r[c[5]]);
    p.sa = parse_double(r[c[6]]);
    p.arias = parse_double(r[c[7]]);
    rows.push_back(p);
  }
  return rows;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  CsvTable t;
  t.header = {"model", "N", "repetition", "metric", "value"};
  for (const auto& r : rows)
    t.rows.push_back({r.model, std::to_string(r.n), std::to_string(r.repetition), r.metric,
                      format_double(r.value)});
  write_csv(path, t);
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cm = t.column("model"), cn = t.column("N"), cr = t.column("repetition"),
                    ck = t.column("metric"), cv = t.column("value");
  std::vector<ResultRow> rows;
  for (const auto& r : t.rows)
    rows.push_back({r[cm], std::stoull(r[cn]), std::stoull(r[cr]), r[ck], parse_double(r[cv])});
  return rows;
}

void write_params_csv(const std::filesystem::path& path, const std::vector<gm::GroundMotionParams>& xs) {
  CsvTable t;
  t.header = {"ia", "t_mid", "d595", "omega_g"};
  for (const auto& x : xs)
    t.rows.push_back({format_double(x.ia), format_double(x.t_mid), format_double(x.d595),
                      format_double(x.omega_g)});
  write_csv(path, t);
}

std::vector<gm::GroundMotionParams> read_params_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c[4] = {t.column("ia"), t.column("t_mid"), t.column("d595"), t.column("omega_g")};
  std::vector<gm::GroundMotionParams> xs;
  for (const auto& r : t.rows) {
    gm::GroundMotionParams x{parse_double(r[c[0]]), parse_double(r[c[1]]), parse_double(r[c[2]]),
                             parse_double(r[c[3]]), gm::kDefaultZetaG};
    x.validate();
    xs.push_back(x);
  }
  return xs;
}

void write_motion_batch(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                        const std::vector<gm::AccelTimeSeries>& motions,
                        const std::vector<gm::GroundMotionParams>& params,
                        const std::vector<std::uint64_t>& seeds, const gm::SynthesisConfig& cfg) {
  if (params.size() != motions.size() || seeds.size() != motions.size())
    throw DomainError("write_motion_batch: one parameter set and seed per record");
  {
    auto out = open_out(csv_path);
    out << "dt,n,values\n";
    for (const auto& m : motions) {
      out << format_double(m.dt) << ',' << m.size();
      for (double v : m.values) out << ',' << format_double(v);
      out << '\n';
    }
  }
  nlohmann::json side;
  side["config"] = {{"dt", cfg.dt},           {"duration", cfg.duration}, {"n_freq", cfg.n_freq},
                    {"omega_cut", cfg.omega_cut}, {"zeta_hp", cfg.zeta_hp},  {"extend_duration", cfg.extend_duration},
                    {"energy_scale", cfg.energy_scale}, {"renormalize_highpass", cfg.renormalize_highpass}};
  side["records"] = nlohmann::json::array();
  for (std::size_t i = 0; i < motions.size(); ++i) {
    const auto& x = params[i];
    side["records"].push_back({{"ia", x.ia},
                               {"t_mid", x.t_mid},
                               {"d595", x.d595},
                               {"omega_g", x.omega_g},
                               {"zeta_g", x.zeta_g},
                               {"seed", seeds[i]},
                               {"energy_coverage", motions[i].energy_coverage}});
  }
  auto out = open_out(json_path);
  out << side.dump(2) << '\n';
}

std::vector<gm::AccelTimeSeries> read_motion_batch(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw DomainError("cannot read " + csv_path.string());
  std::string line;
  std::getline(in, line);
  std::vector<gm::AccelTimeSeries> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 2) throw DomainError("motion batch: truncated row");
    gm::AccelTimeSeries ts;
    ts.dt = parse_double(cells[0]);
    const std::size_t n = std::stoull(cells[1]);
    if (cells.size() != n + 2) throw DomainError("motion batch: row length does not match n");
    ts.values.reserve(n);
    for (std::size_t k = 0; k < n; ++k) ts.values.push_back(parse_double(cells[k + 2]));
    ts.validate();
    out.push_back(std::move(ts));
  }
  return out;
}

void write_response_csv(const std::filesystem::path& path, const structure::ResponseRecord& r) {
  const auto stories = r.drifts.rows();
  auto out = open_out(path);
  out << 't';
  for (Eigen::Index s = 0; s < stories; ++s) out << ",v" << s + 1;
  for (Eigen::Index s = 0; s < stories; ++s) out << ",z" << s + 1;
  out << '\n';
  for (Eigen::Index k = 0; k < r.drifts.cols(); ++k) {
    out << format_double(r.dt * static_cast<double>(k));
    for (Eigen::Index s = 0; s < stories; ++s) out << ',' << format_double(r.drifts(s, k));
    for (Eigen::Index s = 0; s < stories; ++s) out << ',' << format_double(r.hysteretic(s, k));
    out << '\n';
  }
}

}  // namespace seisfrag::io
