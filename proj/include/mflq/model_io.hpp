#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mflq/model.hpp"

namespace mflq {

/// Reads a model from its JSON form. Coefficients may be a single matrix
/// (constant) or a list of n_steps+1 matrices; per-atom coefficients are
/// lists indexed by atom. Omitted coefficients are zero. Cost weights are
/// symmetrized; any warnings are appended to `warnings` when given.
ModelSpec parse_model(const nlohmann::json& j, std::vector<std::string>* warnings = nullptr);

ModelSpec load_model(const std::filesystem::path& path,
                     std::vector<std::string>* warnings = nullptr);

nlohmann::json model_to_json(const ModelSpec& spec);

void save_model(const ModelSpec& spec, const std::filesystem::path& path);

}  // namespace mflq
