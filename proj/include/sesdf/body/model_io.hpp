#pragma once

#include <filesystem>

#include "json.hpp"
#include "sesdf/body/body_model.hpp"

namespace sesdf {

nlohmann::json model_to_json(const BodyModel& model);
// Validates the result; throws sesdf::Error on schema or invariant violations.
BodyModel model_from_json(const nlohmann::json& j);

void save_model(const BodyModel& model, const std::filesystem::path& path);
BodyModel load_model(const std::filesystem::path& path);

nlohmann::json params_to_json(const BodyParams& params);
BodyParams params_from_json(const nlohmann::json& j);

}  // namespace sesdf
