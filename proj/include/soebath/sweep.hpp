#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "soebath/common.hpp"
#include "soebath/spectral.hpp"

namespace soebath {

enum class SweepAxis { T, eps, beta };
enum class SweepMethod { quadrature, quadrature_refine, esprit };
enum class OutputFormat { csv, json };

std::string to_string(SweepAxis a);
std::string to_string(SweepMethod m);
SweepAxis sweep_axis_from_string(const std::string& s);
SweepMethod sweep_method_from_string(const std::string& s);
OutputFormat output_format_from_string(const std::string& s);

struct SweepSpec {
  SpectralModel model;
  SweepAxis axis = SweepAxis::T;
  std::vector<double> values;
  double eps = 0.01;
  double T = 100.0;
  double beta = inf;  // used only on the beta axis
  SweepMethod method = SweepMethod::quadrature_refine;
  Norm norm = Norm::L1;
  double dt = 0.01;
  std::size_t n_max = 40;
  int jobs = 0;  // 0: number of logical cores

  void validate() const;
};

/// Ohmic (gamma = 1, omega_c = 1) boson at zero temperature, ESPRIT, eps = dt = 0.01,
/// T in {10, 100, 1000, 10000}.
SweepSpec fig1_preset();

/// Spec fields from JSON; "model" may be an inline object or a file path.
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

struct SweepRow {
  double axis_value = 0.0;
  std::size_t N = 0;
  double error = 0.0;
  double wall_time_s = 0.0;
  bool flagged = false;
  std::string message;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::T;
  SweepMethod method = SweepMethod::esprit;
  Norm norm = Norm::L1;
  std::vector<SweepRow> rows;
  /// c x, c log(1+x), c log(1+x)^2, each equal to the first row's N at the first axis value.
  std::vector<double> ref_T, ref_logT, ref_log2T;

  bool any_flagged() const;
};

SweepResult run_sweep(const SweepSpec& spec);

/// Fills the three reference curves from the rows.
void anchor_reference_curves(SweepResult& result);

void emit(const SweepResult& result, const std::string& path, OutputFormat format);
std::string to_csv(const SweepResult& result);
nlohmann::ordered_json to_json(const SweepResult& result);
SweepResult sweep_result_from_json(const nlohmann::ordered_json& j);

}  // namespace soebath
