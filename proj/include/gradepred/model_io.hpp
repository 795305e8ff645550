#pragma once

#include <string>

#include <json.hpp>

#include "gradepred/ensemble.hpp"

namespace gradepred {

inline constexpr const char* kModelFormatVersion = "gradepred-model/1";

/// Single JSON document: version tag, model kind and variant, params, base
/// scores and flattened per-tree arrays. Doubles round-trip exactly.
nlohmann::json model_to_json(const Model& model);

/// Throws DataError on a malformed document or unknown version.
Model model_from_json(const nlohmann::json& doc);

}  // namespace gradepred
