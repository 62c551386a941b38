#include <omp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "json_config.hpp"

#include "soebath/config.hpp"
#include "soebath/contour.hpp"
#include "soebath/gle.hpp"
#include "soebath/oracle.hpp"
#include "soebath/prony.hpp"
#include "soebath/soe.hpp"
#include "soebath/sweep.hpp"

using namespace soebath;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

enum Exit { ok = 0, failure = 1, partial = 2, config_error = 3 };

struct ConfigError : Error {
  using Error::Error;
};

struct Globals {
  std::string out = "-";
  std::string format;
  int jobs = 0;
  std::uint64_t seed = 1;
};

// Writes to --out, or stdout for "-".
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot open '" + path + "' for writing");
    }
    stream().precision(17);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (!stream()) throw Error("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

OutputFormat format_or(const Globals& g, OutputFormat fallback) {
  if (g.format.empty()) return fallback;
  return output_format_from_string(g.format);
}

SpectralModel model_arg(const std::string& text) {
  if (text.empty()) throw ConfigError("--model is required");
  try {
    if (text.front() == '{') return model_from_json(json::parse(text));
    return load_model_file(text);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

Norm norm_arg(const std::string& s) {
  if (s == "l1" || s == "L1") return Norm::L1;
  if (s == "linf" || s == "Linf") return Norm::Linf;
  throw ConfigError("--norm must be l1 or linf");
}

// build

struct BuildArgs {
  std::string model;
  double eps = 0.01;
  double T = 100.0;
  std::string norm = "l1";
  double theta0 = pi / 12;
  double theta1 = pi / 12;
  double kappa = 1.0;
  double dt = 0.01;
  bool no_refine = false;
};

int run_build(const BuildArgs& a, const Globals& g) {
  const auto model = model_arg(a.model);
  BuildOptions opts;
  opts.norm = norm_arg(a.norm);
  opts.theta0 = a.theta0;
  opts.theta1 = a.theta1;
  opts.kappa = a.kappa;
  opts.dt = a.dt;
  opts.refine = !a.no_refine;
  const auto r = build_bcf_soe(model, a.eps, a.T, opts);
  Sink sink(g.out);
  if (format_or(g, OutputFormat::json) == OutputFormat::json) {
    json j = to_json(r.soe);
    j["meta"]["converged"] = r.converged;
    j["meta"]["rounds"] = r.rounds;
    sink.stream() << j.dump(2) << '\n';
  } else {
    sink.stream() << "c_re,c_im,z_re,z_im\n";
    for (const auto& t : r.soe.terms())
      sink.stream() << t.c.real() << ',' << t.c.imag() << ',' << t.z.real() << ',' << t.z.imag() << '\n';
  }
  sink.close();
  std::cerr << "N = " << r.soe.size();
  if (r.achieved_error) std::cerr << ", error = " << *r.achieved_error;
  std::cerr << (r.converged ? "" : " (not converged)") << '\n';
  return r.converged ? ok : partial;
}

// oracle

struct OracleArgs {
  std::string model;
  double tmax = 100.0;
  double dt = 0.01;
  double tol = 1e-10;
};

int run_oracle(const OracleArgs& a, const Globals& g) {
  const auto model = model_arg(a.model);
  OracleOptions opts;
  opts.abs_tol = a.tol;
  BcfOracle oracle(model, opts);
  const std::size_t n = grid_count(a.tmax, a.dt);
  std::vector<OracleValue> v(n);
  // warm the panel rule for the full range before fanning out
  oracle.evaluate(a.tmax);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) v[k] = oracle.evaluate(k * a.dt);
  bool flagged = false;
  for (const auto& x : v) flagged = flagged || x.flagged;

  Sink sink(g.out);
  auto& os = sink.stream();
  if (format_or(g, OutputFormat::csv) == OutputFormat::csv) {
    os << "t,re,im,err_estimate\n";
    for (std::size_t k = 0; k < n; ++k)
      os << k * a.dt << ',' << v[k].value.real() << ',' << v[k].value.imag() << ',' << v[k].error_estimate << '\n';
  } else {
    ordered_json rows = ordered_json::array();
    for (std::size_t k = 0; k < n; ++k)
      rows.push_back({k * a.dt, v[k].value.real(), v[k].value.imag(), v[k].error_estimate});
    ordered_json j;
    j["columns"] = {"t", "re", "im", "err_estimate"};
    j["closed_form"] = oracle.has_closed_form();
    j["flagged"] = flagged;
    j["rows"] = rows;
    os << j.dump(2) << '\n';
  }
  sink.close();
  if (flagged) std::cerr << "warning: oracle error estimate above tolerance at some times\n";
  return flagged ? partial : ok;
}

// error

struct ErrorArgs {
  std::string model;
  std::string soe;
  double T = 100.0;
  double dt = 0.01;
  std::string norm = "l1";
};

int run_error(const ErrorArgs& a, const Globals& g) {
  const auto model = model_arg(a.model);
  if (a.soe.empty()) throw ConfigError("--soe is required");
  const auto soe = read_json(a.soe);
  const Norm norm = norm_arg(a.norm);
  BcfOracle oracle(model);
  const auto ref = oracle.grid(a.dt, grid_count(a.T, a.dt));
  const double err = norm == Norm::L1 ? l1_error(soe, ref, a.dt) : linf_error(soe, ref, a.dt);
  Sink sink(g.out);
  if (format_or(g, OutputFormat::json) == OutputFormat::json) {
    ordered_json j;
    j["norm"] = to_string(norm);
    j["error"] = err;
    j["N"] = soe.size();
    j["T"] = a.T;
    j["dt"] = a.dt;
    sink.stream() << j.dump(2) << '\n';
  } else {
    sink.stream() << "norm,error,N,T,dt\n"
                  << to_string(norm) << ',' << err << ',' << soe.size() << ',' << a.T << ',' << a.dt << '\n';
  }
  sink.close();
  return ok;
}

// esprit

struct EspritArgs {
  std::string model;
  double eps = 0.01;
  double tmax = 1e4;
  double dt = 0.01;
  std::size_t nmax = 20;
  std::size_t synthetic = 0;
};

int run_esprit(const EspritArgs& a, const Globals& g) {
  SampleSet samples;
  std::optional<SoeRepresentation> truth;
  if (a.synthetic > 0) {
    truth = synthetic_soe(a.synthetic, a.dt, a.tmax, g.seed);
    samples = sample(*truth, a.tmax, a.dt);
  } else {
    BcfOracle oracle(model_arg(a.model));
    samples = SampleSet{oracle.grid(a.dt, grid_count(a.tmax, a.dt)), a.dt, a.tmax};
  }
  const auto mm = minimal_modes(samples, a.eps, a.nmax);
  Sink sink(g.out);
  if (format_or(g, OutputFormat::json) == OutputFormat::json) {
    json j = to_json(mm.soe);
    j["meta"]["converged"] = mm.converged;
    j["meta"]["errors"] = mm.errors;
    if (truth) j["synthetic"] = to_json(*truth);
    sink.stream() << j.dump(2) << '\n';
  } else {
    sink.stream() << "c_re,c_im,z_re,z_im\n";
    for (const auto& t : mm.soe.terms())
      sink.stream() << t.c.real() << ',' << t.c.imag() << ',' << t.z.real() << ',' << t.z.imag() << '\n';
  }
  sink.close();
  std::cerr << "N = " << mm.N << ", error = " << mm.error << (mm.converged ? "" : " (eps not reached)") << '\n';
  return mm.converged ? ok : partial;
}

// sweep

struct SweepArgs {
  std::string preset;
  std::string model;
  std::string axis = "T";
  std::vector<double> values;
  double eps = 0.01;
  double T = 100.0;
  std::string method = "quadrature+refine";
  std::string norm = "l1";
  double dt = 0.01;
  std::size_t nmax = 40;
};

int run_sweep_cmd(const SweepArgs& a, const CLI::App& cmd, const Globals& g) {
  SweepSpec spec;
  try {
    if (!a.preset.empty()) {
      if (a.preset != "fig1") throw ConfigError("unknown preset '" + a.preset + "'");
      spec = fig1_preset();
    } else {
      spec.model = model_arg(a.model);
    }
    // explicit options override the preset
    auto given = [&](const char* name) { return cmd.count(name) > 0 || a.preset.empty(); };
    if (!a.preset.empty() && !a.model.empty()) spec.model = model_arg(a.model);
    if (given("--axis")) spec.axis = sweep_axis_from_string(a.axis);
    if (given("--values")) spec.values = a.values;
    if (given("--eps")) spec.eps = a.eps;
    if (given("--T")) spec.T = a.T;
    if (given("--method")) spec.method = sweep_method_from_string(a.method);
    if (given("--norm")) spec.norm = norm_arg(a.norm);
    if (given("--dt")) spec.dt = a.dt;
    if (given("--nmax")) spec.n_max = a.nmax;
    spec.jobs = g.jobs;
    spec.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const auto result = run_sweep(spec);
  Sink sink(g.out);
  if (format_or(g, OutputFormat::csv) == OutputFormat::csv) sink.stream() << to_csv(result);
  else sink.stream() << std::setw(2) << to_json(result) << '\n';
  sink.close();
  for (const auto& r : result.rows)
    if (r.flagged) std::cerr << "flagged: " << r.axis_value << ": " << r.message << '\n';
  return result.any_flagged() ? partial : ok;
}

// gle

struct GleArgs {
  std::string kernel = "chain";
  std::vector<double> params;
  double dt = 1e-3;
  double tmax = 50.0;
  std::string mode = "aux";
  double eps = 1e-6;
  double stiffness = 1.0;
  double u0 = 1.0;
  double v0 = 0.0;
  double tmin = 1e-3;
  std::size_t stride = 1;
};

int run_gle(const GleArgs& a, const Globals& g) {
  if (a.mode != "aux" && a.mode != "conv" && a.mode != "both") throw ConfigError("--mode must be aux, conv or both");
  MemoryKernel kernel;
  double mass = 1.0;
  if (a.kernel == "chain") {
    const auto p = a.params.empty() ? std::vector<double>{1.0, 1.0} : a.params;
    if (p.size() != 2) throw ConfigError("chain kernel takes --params m K");
    mass = p[0];
    kernel = chain_kernel(p[0], p[1]);
    if (a.mode != "conv") kernel = kernel_to_soe(std::move(kernel), a.eps, a.tmax);
  } else if (a.kernel == "fractional") {
    const auto p = a.params.empty() ? std::vector<double>{1.0, 0.5} : a.params;
    if (p.size() != 2) throw ConfigError("fractional kernel takes --params gamma_nu nu");
    kernel = fractional_kernel(p[0], p[1], a.tmin, a.tmax, a.eps);
  } else {
    throw ConfigError("--kernel must be chain or fractional");
  }
  if (kernel.fit_error) std::cerr << "kernel SOE: N = " << kernel.soe->size() << ", fit error = " << *kernel.fit_error << '\n';
  const auto system = harmonic_system(kernel, mass, a.stiffness, a.u0, a.v0);

  std::vector<Trajectory> runs;
  if (a.mode != "conv") runs.push_back(integrate_aux(system, a.dt, a.tmax, a.stride));
  if (a.mode != "aux") runs.push_back(integrate_convolution(system, a.dt, a.tmax, a.stride));

  Sink sink(g.out);
  auto& os = sink.stream();
  const auto& pts = runs.front().points;
  if (format_or(g, OutputFormat::csv) == OutputFormat::csv) {
    if (a.mode == "both") os << "t,u,v,E,u_conv,v_conv,E_conv\n";
    else os << "t,u,v,E\n";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      os << pts[k].t << ',' << pts[k].u << ',' << pts[k].v << ',' << pts[k].E;
      if (runs.size() == 2) {
        const auto& q = runs[1].points[k];
        os << ',' << q.u << ',' << q.v << ',' << q.E;
      }
      os << '\n';
    }
  } else {
    ordered_json j;
    const char* names[] = {a.mode == "conv" ? "conv" : "aux", "conv"};
    for (std::size_t r = 0; r < runs.size(); ++r) {
      ordered_json rows = ordered_json::array();
      for (const auto& p : runs[r].points) rows.push_back({p.t, p.u, p.v, p.E});
      j[names[r]] = {{"columns", {"t", "u", "v", "E"}}, {"rows", rows}};
    }
    os << j.dump(2) << '\n';
  }
  sink.close();
  if (runs.size() == 2) {
    double d = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) d = std::max(d, std::abs(pts[k].u - runs[1].points[k].u));
    std::cerr << "max |u_aux - u_conv| = " << d << '\n';
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sum-of-exponentials bath correlation functions and GLE embedding", "soebath"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with default option values");

  Globals g;
  app.add_option("--out", g.out, "Output path, - for stdout")->capture_default_str();
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", g.jobs, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Seed for synthetic test data")->capture_default_str();

  BuildArgs ba;
  auto* build = app.add_subcommand("build", "Contour quadrature SOE of a bath correlation function");
  build->add_option("--model", ba.model, "Model JSON file or inline JSON")->required();
  build->add_option("--eps", ba.eps, "Target accuracy")->capture_default_str()->check(CLI::PositiveNumber);
  build->add_option("--T", ba.T, "Time horizon")->capture_default_str()->check(CLI::PositiveNumber);
  build->add_option("--norm", ba.norm)->capture_default_str()->check(CLI::IsMember({"l1", "linf", "L1", "Linf"}));
  build->add_option("--theta0", ba.theta0)->capture_default_str();
  build->add_option("--theta1", ba.theta1)->capture_default_str();
  build->add_option("--kappa", ba.kappa)->capture_default_str()->check(CLI::PositiveNumber);
  build->add_option("--dt", ba.dt, "Error grid step")->capture_default_str()->check(CLI::PositiveNumber);
  build->add_flag("--no-refine", ba.no_refine, "Skip oracle-verified refinement");

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Reference BCF samples with error estimates");
  oracle->add_option("--model", oa.model)->required();
  oracle->add_option("--tmax", oa.tmax)->capture_default_str()->check(CLI::PositiveNumber);
  oracle->add_option("--dt", oa.dt)->capture_default_str()->check(CLI::PositiveNumber);
  oracle->add_option("--tol", oa.tol, "Absolute tolerance")->capture_default_str()->check(CLI::PositiveNumber);

  ErrorArgs ea;
  auto* error = app.add_subcommand("error", "Error of an SOE file against the oracle");
  error->add_option("--model", ea.model)->required();
  error->add_option("--soe", ea.soe, "SOE JSON file")->required();
  error->add_option("--T", ea.T)->capture_default_str()->check(CLI::PositiveNumber);
  error->add_option("--dt", ea.dt)->capture_default_str()->check(CLI::PositiveNumber);
  error->add_option("--norm", ea.norm)->capture_default_str()->check(CLI::IsMember({"l1", "linf", "L1", "Linf"}));

  EspritArgs pa;
  auto* esp = app.add_subcommand("esprit", "Smallest ESPRIT fit reaching eps");
  auto* model_opt = esp->add_option("--model", pa.model);
  auto* synth_opt = esp->add_option("--synthetic", pa.synthetic, "Fit a random N-term SOE instead (uses --seed)");
  model_opt->excludes(synth_opt);
  esp->add_option("--eps", pa.eps)->capture_default_str()->check(CLI::PositiveNumber);
  esp->add_option("--tmax", pa.tmax)->capture_default_str()->check(CLI::PositiveNumber);
  esp->add_option("--dt", pa.dt)->capture_default_str()->check(CLI::PositiveNumber);
  esp->add_option("--nmax", pa.nmax)->capture_default_str()->check(CLI::PositiveNumber);

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "N versus T, eps or beta");
  sweep->add_option("--preset", sa.preset, "Named preset (fig1)");
  sweep->add_option("--model", sa.model);
  sweep->add_option("--axis", sa.axis)->capture_default_str()->check(CLI::IsMember({"T", "eps", "beta"}));
  sweep->add_option("--values", sa.values, "Axis values, ascending");
  sweep->add_option("--eps", sa.eps)->capture_default_str();
  sweep->add_option("--T", sa.T)->capture_default_str();
  sweep->add_option("--method", sa.method)
      ->capture_default_str()
      ->check(CLI::IsMember({"quadrature", "quadrature+refine", "refine", "esprit"}));
  sweep->add_option("--norm", sa.norm)->capture_default_str()->check(CLI::IsMember({"l1", "linf", "L1", "Linf"}));
  sweep->add_option("--dt", sa.dt)->capture_default_str();
  sweep->add_option("--nmax", sa.nmax)->capture_default_str();

  GleArgs ga;
  auto* gle = app.add_subcommand("gle", "Harmonic GLE by auxiliary modes or direct convolution");
  gle->add_option("--kernel", ga.kernel)->capture_default_str()->check(CLI::IsMember({"chain", "fractional"}));
  gle->add_option("--params", ga.params, "chain: m K; fractional: gamma_nu nu");
  gle->add_option("--dt", ga.dt)->capture_default_str()->check(CLI::PositiveNumber);
  gle->add_option("--tmax", ga.tmax)->capture_default_str()->check(CLI::PositiveNumber);
  gle->add_option("--mode", ga.mode)->capture_default_str()->check(CLI::IsMember({"aux", "conv", "both"}));
  gle->add_option("--eps", ga.eps, "Kernel SOE accuracy")->capture_default_str()->check(CLI::PositiveNumber);
  gle->add_option("--stiffness", ga.stiffness)->capture_default_str();
  gle->add_option("--u0", ga.u0)->capture_default_str();
  gle->add_option("--v0", ga.v0)->capture_default_str();
  gle->add_option("--tmin", ga.tmin, "Fractional kernel: lower end of the fit interval")->capture_default_str();
  gle->add_option("--stride", ga.stride, "Output every n-th step")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  try {
    if (g.jobs > 0) omp_set_num_threads(g.jobs);
    if (esp->parsed() && pa.synthetic == 0 && pa.model.empty()) throw ConfigError("esprit needs --model or --synthetic");
    if (build->parsed()) return run_build(ba, g);
    if (oracle->parsed()) return run_oracle(oa, g);
    if (error->parsed()) return run_error(ea, g);
    if (esp->parsed()) return run_esprit(pa, g);
    if (sweep->parsed()) return run_sweep_cmd(sa, *sweep, g);
    if (gle->parsed()) return run_gle(ga, g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}
