#include "soebath/sweep.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "soebath/config.hpp"
#include "soebath/contour.hpp"
#include "soebath/oracle.hpp"
#include "soebath/prony.hpp"

namespace soebath {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::T: return "T";
    case SweepAxis::eps: return "eps";
    case SweepAxis::beta: return "beta";
  }
  return "?";
}

std::string to_string(SweepMethod m) {
  switch (m) {
    case SweepMethod::quadrature: return "quadrature";
    case SweepMethod::quadrature_refine: return "quadrature+refine";
    case SweepMethod::esprit: return "esprit";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "T") return SweepAxis::T;
  if (s == "eps") return SweepAxis::eps;
  if (s == "beta") return SweepAxis::beta;
  throw Error("unknown sweep axis '" + s + "' (expected T, eps or beta)");
}

SweepMethod sweep_method_from_string(const std::string& s) {
  if (s == "quadrature") return SweepMethod::quadrature;
  if (s == "quadrature+refine" || s == "refine") return SweepMethod::quadrature_refine;
  if (s == "esprit") return SweepMethod::esprit;
  throw Error("unknown sweep method '" + s + "'");
}

OutputFormat output_format_from_string(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw Error("unknown output format '" + s + "' (expected csv or json)");
}

void SweepSpec::validate() const {
  model.validate();
  require(!values.empty(), "sweep needs at least one axis value");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] > 0.0, "sweep axis values must be positive");
    if (i > 0) require(values[i] > values[i - 1], "sweep axis values must be sorted ascending");
  }
  require(eps > 0.0 && T > 0.0 && dt > 0.0, "sweep needs eps, T, dt > 0");
  require(n_max >= 1, "sweep n_max must be >= 1");
  if (axis == SweepAxis::beta) {
    require(model.statistics != Statistics::classical, "a beta sweep needs quantum statistics");
  }
}

SweepSpec fig1_preset() {
  SweepSpec s;
  s.model.base = make_preset(DensityFamily::ohmic, {1.0, 1.0});
  s.model.statistics = Statistics::boson;
  s.model.beta = inf;
  s.axis = SweepAxis::T;
  s.values = {10.0, 100.0, 1000.0, 10000.0};
  s.eps = 0.01;
  s.dt = 0.01;
  s.method = SweepMethod::esprit;
  s.norm = Norm::L1;
  s.n_max = 20;
  return s;
}

SweepSpec sweep_spec_from_json(const json& j) {
  SweepSpec s = j.value("preset", std::string()) == "fig1" ? fig1_preset() : SweepSpec{};
  try {
    if (j.contains("model")) s.model = load_model(j.at("model"));
    if (j.contains("axis")) s.axis = sweep_axis_from_string(j.at("axis").get<std::string>());
    if (j.contains("values")) s.values = j.at("values").get<std::vector<double>>();
    if (j.contains("eps")) s.eps = j.at("eps").get<double>();
    if (j.contains("T")) s.T = j.at("T").get<double>();
    if (j.contains("beta")) s.beta = j.at("beta").is_string() ? inf : j.at("beta").get<double>();
    if (j.contains("method")) s.method = sweep_method_from_string(j.at("method").get<std::string>());
    if (j.contains("norm")) s.norm = norm_from_string(j.at("norm").get<std::string>());
    if (j.contains("dt")) s.dt = j.at("dt").get<double>();
    if (j.contains("nmax")) s.n_max = j.at("nmax").get<std::size_t>();
    if (j.contains("jobs")) s.jobs = j.at("jobs").get<int>();
  } catch (const json::exception& e) {
    throw Error(std::string("invalid sweep config: ") + e.what());
  }
  if (!j.contains("model") && j.value("preset", std::string()) != "fig1") throw Error("sweep config needs a \"model\"");
  return s;
}

bool SweepResult::any_flagged() const {
  return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.flagged; });
}

namespace {

SweepRow run_point(const SweepSpec& spec, double value) {
  SweepRow row;
  row.axis_value = value;
  SpectralModel model = spec.model;
  double eps = spec.eps;
  double T = spec.T;
  switch (spec.axis) {
    case SweepAxis::T: T = value; break;
    case SweepAxis::eps: eps = value; break;
    case SweepAxis::beta: model.beta = value; break;
  }
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (spec.method == SweepMethod::esprit) {
      BcfOracle oracle(model);
      SampleSet samples{oracle.grid(spec.dt, grid_count(T, spec.dt)), spec.dt, T};
      const auto mm = minimal_modes(samples, eps, spec.n_max);
      row.N = mm.N;
      row.error = mm.error;
      row.flagged = !mm.converged;
      if (!mm.converged) row.message = "no N <= n_max reached eps";
    } else {
      BuildOptions opts;
      opts.norm = spec.norm;
      opts.dt = spec.dt;
      opts.refine = spec.method == SweepMethod::quadrature_refine;
      const auto built = build_bcf_soe(model, eps, T, opts);
      row.N = built.soe.size();
      if (built.achieved_error) {
        row.error = *built.achieved_error;
      } else {
        BcfOracle oracle(model);
        const auto ref = oracle.grid(spec.dt, grid_count(T, spec.dt));
        row.error = spec.norm == Norm::L1 ? l1_error(built.soe, ref, spec.dt) : linf_error(built.soe, ref, spec.dt);
      }
      row.flagged = !built.converged;
      if (!built.converged) row.message = "refinement did not reach eps";
    }
  } catch (const std::exception& e) {
    row.N = 0;
    row.error = std::nan("");
    row.flagged = true;
    row.message = e.what();
  }
  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

void anchor_reference_curves(SweepResult& result) {
  result.ref_T.clear();
  result.ref_logT.clear();
  result.ref_log2T.clear();
  if (result.rows.empty()) return;
  const double x0 = result.rows.front().axis_value;
  const auto n0 = static_cast<double>(result.rows.front().N);
  const double l0 = std::log1p(x0);
  for (const auto& r : result.rows) {
    const double x = r.axis_value;
    if (x == x0) {
      // exact anchoring at the first point
      result.ref_T.push_back(n0);
      result.ref_logT.push_back(n0);
      result.ref_log2T.push_back(n0);
      continue;
    }
    const double l = std::log1p(x) / l0;
    result.ref_T.push_back(n0 * x / x0);
    result.ref_logT.push_back(n0 * l);
    result.ref_log2T.push_back(n0 * l * l);
  }
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result;
  result.axis = spec.axis;
  result.method = spec.method;
  result.norm = spec.norm;
  result.rows.resize(spec.values.size());
  const int cores = omp_get_num_procs();
  const int jobs = std::max(1, std::min(spec.jobs > 0 ? spec.jobs : cores, static_cast<int>(spec.values.size())));
  // Points run concurrently; each keeps its slot so row order follows the axis.
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(spec.values.size()); ++i) {
    result.rows[static_cast<std::size_t>(i)] = run_point(spec, spec.values[static_cast<std::size_t>(i)]);
  }
  anchor_reference_curves(result);
  return result;
}

std::string to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "axis_value,N,error,wall_time_s,ref_T,ref_logT,ref_log2T\n" << std::setprecision(12);
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    out << r.axis_value << ',' << r.N << ',' << r.error << ',' << r.wall_time_s << ',' << result.ref_T[i] << ','
        << result.ref_logT[i] << ',' << result.ref_log2T[i] << '\n';
  }
  return out.str();
}

ordered_json to_json(const SweepResult& result) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : result.rows) {
    ordered_json row;
    row["axis_value"] = r.axis_value;
    row["N"] = r.N;
    row["error"] = std::isfinite(r.error) ? ordered_json(r.error) : ordered_json(nullptr);
    row["wall_time_s"] = r.wall_time_s;
    row["flagged"] = r.flagged;
    row["message"] = r.message;
    rows.push_back(row);
  }
  ordered_json j;
  j["axis"] = to_string(result.axis);
  j["method"] = to_string(result.method);
  j["norm"] = to_string(result.norm);
  j["rows"] = rows;
  j["reference_curves"] = {{"ref_T", result.ref_T}, {"ref_logT", result.ref_logT}, {"ref_log2T", result.ref_log2T}};
  return j;
}

SweepResult sweep_result_from_json(const ordered_json& j) {
  SweepResult r;
  r.axis = sweep_axis_from_string(j.at("axis").get<std::string>());
  r.method = sweep_method_from_string(j.at("method").get<std::string>());
  r.norm = norm_from_string(j.at("norm").get<std::string>());
  for (const auto& row : j.at("rows")) {
    SweepRow s;
    s.axis_value = row.at("axis_value").get<double>();
    s.N = row.at("N").get<std::size_t>();
    s.error = row.at("error").is_null() ? std::nan("") : row.at("error").get<double>();
    s.wall_time_s = row.at("wall_time_s").get<double>();
    s.flagged = row.at("flagged").get<bool>();
    s.message = row.at("message").get<std::string>();
    r.rows.push_back(s);
  }
  const auto& c = j.at("reference_curves");
  r.ref_T = c.at("ref_T").get<std::vector<double>>();
  r.ref_logT = c.at("ref_logT").get<std::vector<double>>();
  r.ref_log2T = c.at("ref_log2T").get<std::vector<double>>();
  return r;
}

void emit(const SweepResult& result, const std::string& path, OutputFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  if (format == OutputFormat::csv) out << to_csv(result);
  else out << std::setw(2) << to_json(result) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace soebath
