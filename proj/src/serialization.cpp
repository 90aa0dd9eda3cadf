#include "seisfrag/serialization.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seisfrag/common.hpp"

namespace seisfrag::io {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::VectorXd r = m.row(i).transpose();
    rows.push_back(vec_to_json(r));
  }
  return rows;
}

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd mat_from_json(const json& j) {
  if (!j.is_array()) throw DomainError("model file: matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(r.size()) != cols) throw DomainError("model file: ragged matrix");
    m.row(i) = vec_from_json(r).transpose();
  }
  return m;
}

json to_json(const spce::SpceModel& m) {
  const auto& t = m.transform();
  return {{"kind", "spce"},
          {"transform", {{"mu", vec_to_json(t.log_means())}, {"sigma", vec_to_json(t.log_stds())}, {"R", mat_to_json(t.correlation())}}},
          {"truncation", m.truncation().indices},
          {"coeffs", vec_to_json(m.coeffs())},
          {"sigma", m.sigma()},
          {"meta",
           {{"N", m.meta.n_train},
            {"cv_score", m.meta.cv_score},
            {"seed", m.meta.seed},
            {"degree", m.truncation().max_degree},
            {"q", m.truncation().q_norm},
            {"nq", m.nq()}}}};
}

json to_json(const baselines::LinearModel& m) {
  return {{"kind", "lm"}, {"beta0", m.beta0}, {"betas", vec_to_json(m.betas)}, {"sigma", m.sigma}};
}

json to_json(const baselines::ProbitModel& m) {
  return {{"kind", "probit"}, {"beta0", m.beta0}, {"betas", vec_to_json(m.betas)}, {"delta0", m.delta0}};
}

json to_json(const baselines::KcdeModel& m) {
  return {{"kind", "kcde"},
          {"bw_x", vec_to_json(m.bw_x)},
          {"bw_y", m.bw_y},
          {"train_x_log", mat_to_json(m.train_x_log)},
          {"train_y_log", vec_to_json(m.train_y_log)},
          {"warning", m.warning}};
}

spce::SpceModel spce_from_json(const json& j) {
  const auto& t = j.at("transform");
  transforms::InputTransform transform(vec_from_json(t.at("mu")), vec_from_json(t.at("sigma")), mat_from_json(t.at("R")));
  transforms::TruncationSet trunc;
  trunc.indices = j.at("truncation").get<std::vector<transforms::MultiIndex>>();
  const json meta = j.value("meta", json::object());
  int max_total = 0;
  for (const auto& a : trunc.indices) max_total = std::max(max_total, transforms::total_degree(a));
  trunc.max_degree = meta.value("degree", max_total);
  trunc.q_norm = meta.value("q", 1.0);
  spce::SpceModel model(std::move(trunc), vec_from_json(j.at("coeffs")), j.at("sigma").get<double>(),
                        std::move(transform), meta.value("nq", std::size_t{32}));
  model.meta.n_train = meta.value("N", std::size_t{0});
  model.meta.cv_score = meta.value("cv_score", 0.0);
  model.meta.seed = meta.value("seed", std::uint64_t{0});
  return model;
}

AnyModel from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "spce") return spce_from_json(j);
  if (kind == "lm") {
    baselines::LinearModel m;
    m.beta0 = j.at("beta0").get<double>();
    m.betas = vec_from_json(j.at("betas"));
    m.sigma = j.at("sigma").get<double>();
    if (!(m.sigma >= 0.0)) throw DomainError("model file: lm sigma must be non-negative");
    return m;
  }
  if (kind == "probit") {
    baselines::ProbitModel m;
    m.beta0 = j.at("beta0").get<double>();
    m.betas = vec_from_json(j.at("betas"));
    m.delta0 = j.at("delta0").get<double>();
    return m;
  }
  if (kind == "kcde") {
    baselines::KcdeModel m;
    m.bw_x = vec_from_json(j.at("bw_x"));
    m.bw_y = j.at("bw_y").get<double>();
    m.train_x_log = mat_from_json(j.at("train_x_log"));
    m.train_y_log = vec_from_json(j.at("train_y_log"));
    m.warning = j.value("warning", std::string{});
    m.validate();
    return m;
  }
  throw DomainError("model file: unknown model kind '" + kind + "'");
}

}  // namespace

std::string model_kind(const AnyModel& model) {
  static const char* kNames[] = {"spce", "lm", "probit", "kcde"};
  return kNames[model.index()];
}

std::string serialize(const AnyModel& model) {
  return std::visit([](const auto& m) { return to_json(m).dump(2); }, model);
}

AnyModel deserialize(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw DomainError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  out << serialize(model) << '\n';
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace seisfrag::io
