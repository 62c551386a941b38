#pragma once

#include <string>

#include "json.hpp"

#include "soebath/spectral.hpp"

namespace soebath {

/// {"density": {"preset": name, "params": [...]}, "statistics": "boson" | "fermion" | "classical",
///  "beta": number | "inf", "mu": number, "branch": "lesser" | "greater" | "total"}
SpectralModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const SpectralModel& model);

/// Accepts either an inline model object or a path to a JSON file.
SpectralModel load_model(const nlohmann::json& j_or_path);
SpectralModel load_model_file(const std::string& path);

nlohmann::json read_json_file(const std::string& path);

}  // namespace soebath
