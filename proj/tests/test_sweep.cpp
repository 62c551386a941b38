#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "soebath/config.hpp"
#include "soebath/sweep.hpp"

using namespace soebath;
using nlohmann::json;

namespace {

SweepSpec ohmic_T_sweep() {
  SweepSpec s;
  s.model.base = make_preset(DensityFamily::ohmic, {1, 1});
  s.model.statistics = Statistics::boson;
  s.values = {10.0, 100.0};
  s.eps = 1e-2;
  s.jobs = 2;
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("sweep") {
  TEST_CASE("model JSON round trip and errors") {
    SpectralModel m;
    m.base = make_preset(DensityFamily::step, {-1, 1});
    m.statistics = Statistics::fermion;
    m.beta = 3.0;
    m.mu = 0.2;
    m.branch = Branch::greater;
    const auto back = model_from_json(model_to_json(m));
    CHECK(back.base.family == DensityFamily::step);
    CHECK(back.base.params == m.base.params);
    CHECK(back.statistics == Statistics::fermion);
    CHECK(back.beta == 3.0);
    CHECK(back.mu == 0.2);
    CHECK(back.branch == Branch::greater);

    const auto cold = model_from_json(json::parse(R"({"density": {"preset": "ohmic", "params": [1, 1]},
                                                      "statistics": "boson", "beta": "inf"})"));
    CHECK(cold.zero_temperature());
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"density": {"preset": "nope", "params": []}})")), Error);
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"density": {"preset": "step", "params": [-1, 1]},
                                                    "statistics": "fermion"})")),
                    Error);
    CHECK_THROWS_AS(load_model(json("/nonexistent/model.json")), Error);
  }

  TEST_CASE("spec from JSON and the fig1 preset") {
    const auto f = sweep_spec_from_json(json{{"preset", "fig1"}});
    CHECK(f.method == SweepMethod::esprit);
    CHECK(f.values == std::vector<double>{10.0, 100.0, 1000.0, 10000.0});
    CHECK(f.eps == 0.01);
    CHECK(f.dt == 0.01);
    const auto o = sweep_spec_from_json(json{{"preset", "fig1"}, {"eps", 1e-3}, {"values", {10, 20}}});
    CHECK(o.eps == 1e-3);
    CHECK(o.values.size() == 2);
    const auto s = sweep_spec_from_json(json::parse(R"({"model": {"density": {"preset": "semicircle", "params": [2, 1]}},
                                                        "axis": "eps", "values": [1e-4, 1e-2], "method": "refine",
                                                        "norm": "Linf", "nmax": 7})"));
    CHECK(s.axis == SweepAxis::eps);
    CHECK(s.method == SweepMethod::quadrature_refine);
    CHECK(s.norm == Norm::Linf);
    CHECK(s.n_max == 7);
    CHECK_THROWS_AS(sweep_spec_from_json(json{{"axis", "T"}}), Error);
    CHECK_THROWS_AS(sweep_spec_from_json(json{{"preset", "fig1"}, {"axis", "omega"}}), Error);
    CHECK_THROWS_AS(sweep_spec_from_json(json{{"preset", "fig1"}, {"eps", "small"}}), Error);
  }

  TEST_CASE("validation") {
    auto s = ohmic_T_sweep();
    CHECK_NOTHROW(s.validate());
    s.values = {100.0, 10.0};
    CHECK_THROWS_AS(s.validate(), Error);
    s.values = {};
    CHECK_THROWS_AS(s.validate(), Error);
    s = ohmic_T_sweep();
    s.axis = SweepAxis::beta;
    s.model.statistics = Statistics::classical;
    CHECK_THROWS_AS(s.validate(), Error);
  }

  TEST_CASE("rows, anchoring and determinism") {
    const auto spec = ohmic_T_sweep();
    const auto a = run_sweep(spec);
    REQUIRE(a.rows.size() == 2);
    CHECK_FALSE(a.any_flagged());
    for (const auto& r : a.rows) {
      CHECK(r.N >= 1);
      CHECK(r.error <= spec.eps);
      CHECK(r.wall_time_s >= 0.0);
    }
    CHECK(a.rows[0].axis_value == 10.0);
    const auto n0 = static_cast<double>(a.rows[0].N);
    CHECK(a.ref_T[0] == n0);
    CHECK(a.ref_logT[0] == n0);
    CHECK(a.ref_log2T[0] == n0);
    CHECK(a.ref_T[1] == doctest::Approx(10.0 * n0));
    const double l = std::log1p(100.0) / std::log1p(10.0);
    CHECK(a.ref_logT[1] == doctest::Approx(l * n0));
    CHECK(a.ref_log2T[1] == doctest::Approx(l * l * n0));

    auto serial = spec;
    serial.jobs = 1;
    const auto b = run_sweep(serial);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].N == b.rows[i].N);
      CHECK(a.rows[i].error == b.rows[i].error);
    }
  }

  TEST_CASE("failed points are flagged and the sweep continues") {
    auto spec = ohmic_T_sweep();
    spec.method = SweepMethod::esprit;
    spec.n_max = 1;
    spec.eps = 1e-12;
    spec.values = {5.0};
    const auto r = run_sweep(spec);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].flagged);
    CHECK(r.any_flagged());
    CHECK_FALSE(r.rows[0].message.empty());

    // a boson at finite temperature with J(0) != 0 has a pole on the axis
    auto bad = ohmic_T_sweep();
    bad.model.base = make_preset(DensityFamily::step, {0, 1});
    bad.model.beta = 1.0;
    bad.values = {5.0, 10.0};
    const auto f = run_sweep(bad);
    REQUIRE(f.rows.size() == 2);
    for (const auto& row : f.rows) {
      CHECK(row.flagged);
      CHECK(row.N == 0);
      CHECK(std::isnan(row.error));
      CHECK_FALSE(row.message.empty());
    }
    const auto j = to_json(f);
    CHECK(j["rows"][0]["error"].is_null());
  }

  TEST_CASE("CSV and JSON output") {
    const auto res = run_sweep(ohmic_T_sweep());
    const auto csv = to_csv(res);
    CHECK(csv.rfind("axis_value,N,error,wall_time_s,ref_T,ref_logT,ref_log2T\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    const auto back = sweep_result_from_json(to_json(res));
    CHECK(back.axis == res.axis);
    CHECK(back.method == res.method);
    REQUIRE(back.rows.size() == res.rows.size());
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      CHECK(back.rows[i].N == res.rows[i].N);
      CHECK(back.rows[i].error == res.rows[i].error);
      CHECK(back.ref_log2T[i] == res.ref_log2T[i]);
    }

    SweepResult empty;
    CHECK(to_csv(empty) == "axis_value,N,error,wall_time_s,ref_T,ref_logT,ref_log2T\n");

    const std::string path = "sweep_test_out.json";
    emit(res, path, OutputFormat::json);
    CHECK(sweep_result_from_json(nlohmann::ordered_json::parse(slurp(path))).rows.size() == 2);
    std::remove(path.c_str());
    CHECK_THROWS_AS(emit(res, "/nonexistent/dir/out.csv", OutputFormat::csv), Error);
  }
}
