#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "seisfrag/baselines.hpp"
#include "seisfrag/spce.hpp"

namespace seisfrag::io {

using AnyModel = std::variant<spce::SpceModel, baselines::LinearModel, baselines::ProbitModel,
                              baselines::KcdeModel>;

/// "spce", "lm", "probit" or "kcde".
std::string model_kind(const AnyModel& model);

/// JSON text tagged by "kind". Doubles are written with round-trip precision.
std::string serialize(const AnyModel& model);
/// Throws DomainError on malformed or inconsistent content.
AnyModel deserialize(const std::string& text);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace seisfrag::io
