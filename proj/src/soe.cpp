#include "soebath/soe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "soebath/kernels.hpp"

namespace soebath {

using nlohmann::json;

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::quadrature: return "quadrature";
    case Provenance::esprit: return "esprit";
    case Provenance::analytic: return "analytic";
  }
  return "?";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "quadrature") return Provenance::quadrature;
  if (s == "esprit") return Provenance::esprit;
  if (s == "analytic") return Provenance::analytic;
  throw Error("unknown provenance '" + s + "'");
}

SoeRepresentation::SoeRepresentation(std::vector<SoeTerm> terms, double horizon, Provenance provenance)
    : terms_(std::move(terms)), horizon_(horizon), provenance_(provenance) {
  require(!terms_.empty(), "an SOE needs at least one term");
  require(horizon_ > 0.0, "SOE horizon must be > 0");
  for (const auto& t : terms_) {
    require(std::isfinite(t.c.real()) && std::isfinite(t.c.imag()), "SOE weight is not finite");
    require(std::isfinite(t.z.real()) && std::isfinite(t.z.imag()), "SOE pole is not finite");
    require(t.z.imag() <= 1e-12, "SOE pole has a growing mode (Im z > 0)");
  }
}

void SoeRepresentation::set_horizon(double T) {
  require(T > 0.0, "SOE horizon must be > 0");
  horizon_ = T;
}

cplx eval(const SoeRepresentation& soe, double t) {
  require(t >= 0.0, "SOE evaluation requires t >= 0");
  std::vector<std::size_t> order(soe.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& terms = soe.terms();
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(terms[a].c) > std::abs(terms[b].c); });
  // Neumaier summation, real and imaginary parts separately
  double sr = 0.0, si = 0.0, cr = 0.0, ci = 0.0;
  auto add = [](double& s, double& c, double v) {
    const double t = s + v;
    if (std::abs(s) >= std::abs(v)) c += (s - t) + v;
    else c += (v - t) + s;
    s = t;
  };
  for (std::size_t j : order) {
    const cplx v = terms[j].c * std::exp(cplx(0.0, -1.0) * terms[j].z * t);
    add(sr, cr, v.real());
    add(si, ci, v.imag());
  }
  return {sr + cr, si + ci};
}

std::vector<cplx> eval_uniform(const SoeRepresentation& soe, double dt, std::size_t n) {
  require(n >= 1, "eval_uniform: empty grid");
  require(dt > 0.0, "eval_uniform: dt must be > 0");
  std::vector<cplx> out(n);
  kernels::soe_uniform(soe.terms(), dt, out);
  return out;
}

std::vector<cplx> eval_grid(const SoeRepresentation& soe, std::span<const double> t) {
  require(!t.empty(), "eval_grid: empty grid");
  for (std::size_t k = 0; k < t.size(); ++k) {
    require(t[k] >= 0.0, "eval_grid: grid must be >= 0");
    if (k > 0) require(t[k] >= t[k - 1], "eval_grid: grid must be nondecreasing");
  }
  if (t.size() >= 3 && t[0] == 0.0) {
    const double dt = t[1];
    bool uniform = dt > 0.0;
    for (std::size_t k = 1; uniform && k < t.size(); ++k) {
      uniform = std::abs(t[k] - static_cast<double>(k) * dt) <= 1e-12 * std::max(1.0, t[k]);
    }
    if (uniform) return eval_uniform(soe, dt, t.size());
  }
  std::vector<cplx> out(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = eval(soe, t[k]);
  return out;
}

SoeRepresentation affine_rescale(const SoeRepresentation& soe, double s, double d) {
  require(s > 0.0, "affine_rescale: scale must be > 0");
  std::vector<SoeTerm> terms;
  terms.reserve(soe.size());
  for (const auto& t : soe.terms()) terms.push_back({t.c, s * t.z + d});
  SoeRepresentation out(std::move(terms), soe.horizon() / s, soe.provenance());
  out.set_real_kernel(soe.real_kernel() && d == 0.0);
  return out;
}

SoeRepresentation merge(const SoeRepresentation& a, const SoeRepresentation& b, bool consolidate) {
  std::vector<SoeTerm> terms = a.terms();
  if (!consolidate) {
    terms.insert(terms.end(), b.terms().begin(), b.terms().end());
  } else {
    for (const auto& t : b.terms()) {
      auto it = std::find_if(terms.begin(), terms.end(),
                             [&](const SoeTerm& u) { return std::abs(u.z - t.z) < 1e-14; });
      if (it != terms.end()) it->c += t.c;
      else terms.push_back(t);
    }
  }
  const Provenance p = a.provenance() == b.provenance() ? a.provenance() : Provenance::quadrature;
  SoeRepresentation out(std::move(terms), std::min(a.horizon(), b.horizon()), p);
  out.set_real_kernel(a.real_kernel() && b.real_kernel());
  return out;
}

std::size_t grid_count(double T, double dt) {
  require(dt > 0.0, "time step must be > 0");
  require(T >= 0.0, "horizon must be >= 0");
  // tolerate T = m dt up to rounding
  return static_cast<std::size_t>(std::floor(T / dt * (1.0 + 1e-12))) + 1;
}

namespace {

std::vector<cplx> sample_reference(const ScalarReference& reference, double dt, std::size_t n) {
  std::vector<cplx> ref(n);
  for (std::size_t k = 0; k < n; ++k) ref[k] = reference(static_cast<double>(k) * dt);
  return ref;
}

}  // namespace

double l1_error(const SoeRepresentation& soe, std::span<const cplx> reference, double dt) {
  require(dt > 0.0, "l1_error: dt must be > 0");
  const auto approx = eval_uniform(soe, dt, reference.size());
  return kernels::abs_diff_sum(approx, reference) * dt;
}

double linf_error(const SoeRepresentation& soe, std::span<const cplx> reference, double dt) {
  require(dt > 0.0, "linf_error: dt must be > 0");
  const auto approx = eval_uniform(soe, dt, reference.size());
  return kernels::abs_diff_max(approx, reference);
}

double l1_error(const SoeRepresentation& soe, const ScalarReference& reference, double T, double dt) {
  require(dt > 0.0 && T >= dt, "l1_error: need dt > 0 and T >= dt");
  const auto ref = sample_reference(reference, dt, grid_count(T, dt));
  return l1_error(soe, ref, dt);
}

double linf_error(const SoeRepresentation& soe, const ScalarReference& reference, double T, double dt) {
  require(dt > 0.0 && T >= dt, "linf_error: need dt > 0 and T >= dt");
  const auto ref = sample_reference(reference, dt, grid_count(T, dt));
  return linf_error(soe, ref, dt);
}

json to_json(const SoeRepresentation& soe) {
  json terms = json::array();
  for (const auto& t : soe.terms()) {
    terms.push_back({{"c", {t.c.real(), t.c.imag()}}, {"z", {t.z.real(), t.z.imag()}}});
  }
  json meta = {{"provenance", to_string(soe.provenance())}, {"N", soe.size()}, {"real_kernel", soe.real_kernel()}};
  if (soe.achieved_error()) {
    meta["achieved_error"] = {{"norm", to_string(soe.achieved_error()->norm)}, {"value", soe.achieved_error()->value}};
  }
  return json{{"terms", terms}, {"horizon", soe.horizon()}, {"meta", meta}};
}

SoeRepresentation soe_from_json(const json& j) {
  try {
    std::vector<SoeTerm> terms;
    for (const auto& t : j.at("terms")) {
      const auto& c = t.at("c");
      const auto& z = t.at("z");
      terms.push_back({cplx(c.at(0).get<double>(), c.at(1).get<double>()),
                       cplx(z.at(0).get<double>(), z.at(1).get<double>())});
    }
    Provenance p = Provenance::quadrature;
    const json meta = j.value("meta", json::object());
    if (meta.contains("provenance")) p = provenance_from_string(meta.at("provenance").get<std::string>());
    SoeRepresentation soe(std::move(terms), j.at("horizon").get<double>(), p);
    soe.set_real_kernel(meta.value("real_kernel", false));
    if (meta.contains("achieved_error")) {
      const auto& e = meta.at("achieved_error");
      soe.set_achieved_error(norm_from_string(e.at("norm").get<std::string>()), e.at("value").get<double>());
    }
    return soe;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid SOE JSON: ") + e.what());
  }
}

void write_json(const SoeRepresentation& soe, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << std::setprecision(17) << to_json(soe).dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

SoeRepresentation read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("invalid SOE JSON in '" + path + "': " + e.what());
  }
  return soe_from_json(j);
}

void write_csv(const SoeRepresentation& soe, double T, double dt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  const std::size_t n = grid_count(T, dt);
  const auto v = eval_uniform(soe, dt, n);
  out << "t,re,im\n" << std::setprecision(17);
  for (std::size_t k = 0; k < n; ++k) out << static_cast<double>(k) * dt << ',' << v[k].real() << ',' << v[k].imag() << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace soebath
