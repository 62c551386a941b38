#include "soebath/config.hpp"

#include <fstream>

namespace soebath {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("invalid JSON in '" + path + "': " + e.what());
  }
}

SpectralModel model_from_json(const json& j) {
  try {
    SpectralModel m;
    const auto& d = j.at("density");
    m.base = make_preset(d.at("preset").get<std::string>(), d.at("params").get<std::vector<double>>());
    m.statistics = statistics_from_string(j.value("statistics", std::string("classical")));
    if (j.contains("beta")) {
      const auto& b = j.at("beta");
      if (b.is_string()) {
        require(b.get<std::string>() == "inf", "beta must be a number or \"inf\"");
        m.beta = inf;
      } else {
        m.beta = b.get<double>();
      }
    }
    m.mu = j.value("mu", 0.0);
    const std::string def_branch = m.statistics == Statistics::fermion ? "" : "total";
    const std::string branch = j.value("branch", def_branch);
    require(!branch.empty(), "fermionic models need \"branch\": \"lesser\" or \"greater\"");
    m.branch = branch_from_string(branch);
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid model JSON: ") + e.what());
  }
}

json model_to_json(const SpectralModel& m) {
  json beta = m.zero_temperature() ? json("inf") : json(m.beta);
  return json{{"density", {{"preset", to_string(m.base.family)}, {"params", m.base.params}}},
              {"statistics", to_string(m.statistics)},
              {"beta", beta},
              {"mu", m.mu},
              {"branch", to_string(m.branch)}};
}

SpectralModel load_model_file(const std::string& path) { return model_from_json(read_json_file(path)); }

SpectralModel load_model(const json& j) {
  if (j.is_string()) return load_model_file(j.get<std::string>());
  return model_from_json(j);
}

}  // namespace soebath
