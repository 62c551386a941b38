#include "soebath/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "soebath/kernels.hpp"

namespace soebath {

namespace {

// Gauss-Kronrod 7/15 on [-1, 1]; Gauss nodes are the odd-indexed Kronrod nodes.
constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Node15 {
  double x;   // in [-1, 1]
  double wk;  // Kronrod weight
  double wg;  // Gauss weight (0 for Kronrod-only nodes)
};

std::array<Node15, 15> make_nodes() {
  std::array<Node15, 15> out{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < 7; ++i) {
    const double wg = (i % 2 == 1) ? kWg[i / 2] : 0.0;
    out[n++] = {-kXgk[i], kWgk[i], wg};
    out[n++] = {kXgk[i], kWgk[i], wg};
  }
  out[n] = {0.0, kWgk[7], kWg[3]};
  return out;
}

const std::array<Node15, 15> kNodes = make_nodes();

// [s0, s1] measured from the lower (from_lo) or upper (from_hi) end of a segment.
struct Panel {
  double s0, s1;
  bool from_hi;
};

int grading_depth(double order, double tol) {
  const double a = std::min(order, 0.0) + 1.0;
  const double d = std::ceil(std::log2(1.0 / tol) / a) + 10.0;
  return static_cast<int>(std::clamp(d, 12.0, 200.0));
}

cplx sinc_shift(double a, double b, double t) {
  // (e^{-iat} - e^{-ibt}) / (it) = e^{-ict} 2 sin(rt) / t
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const double x = r * t;
  const double sinc = std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
  return std::exp(cplx(0.0, -c * t)) * (2.0 * r * sinc);
}

}  // namespace

std::optional<ScalarReference> closed_form(const SpectralModel& model) {
  const auto& p = model.base.params;
  const bool classical = model.statistics == Statistics::classical;
  switch (model.base.family) {
    case DensityFamily::ohmic: {
      if (!(classical || (model.statistics == Statistics::boson && model.zero_temperature()))) return std::nullopt;
      const double g = p[0];
      const double wc = p[1];
      const double gam = std::tgamma(g + 1.0);
      return ScalarReference([g, wc, gam](double t) { return gam * std::pow(cplx(1.0, wc * t), -(g + 1.0)); });
    }
    case DensityFamily::step: {
      double a = p[0];
      double b = p[1];
      if (model.statistics == Statistics::fermion) {
        if (!model.zero_temperature()) return std::nullopt;
        if (model.branch == Branch::lesser) b = std::min(b, model.mu);
        else a = std::max(a, model.mu);
        if (!(a < b)) return std::nullopt;
      } else if (!classical) {
        return std::nullopt;
      }
      return ScalarReference([a, b](double t) { return sinc_shift(a, b, t); });
    }
    case DensityFamily::semicircle: {
      if (!classical) return std::nullopt;
      const double wd = p[0];
      const double m = p[1];
      return ScalarReference([wd, m](double t) {
        const double x = wd * std::abs(t);
        // J1(x)/x -> 1/2 as x -> 0
        const double j1x = x < 1e-6 ? 0.5 - x * x / 16.0 : std::cyl_bessel_j(1.0, x) / x;
        return cplx(m * pi * wd * wd * j1x, 0.0);
      });
    }
    case DensityFamily::inverse_sqrt_edges: {
      if (!classical) return std::nullopt;
      const double c = 0.5 * (p[0] + p[1]);
      const double r = 0.5 * (p[1] - p[0]);
      return ScalarReference([c, r](double t) {
        return std::exp(cplx(0.0, -c * t)) * std::cyl_bessel_j(0.0, r * std::abs(t));
      });
    }
    case DensityFamily::log_model:
    case DensityFamily::fractional:
      return std::nullopt;
  }
  return std::nullopt;
}

BcfOracle::BcfOracle(SpectralModel model, OracleOptions opts) : model_(std::move(model)), opts_(opts) {
  require(opts_.abs_tol > 0.0, "oracle abs_tol must be > 0");
  model_.validate();
  if (opts_.use_closed_form) closed_ = closed_form(model_);
  // Tail beyond the oracle's own cutoff is far below abs_tol.
  SegmentOptions so;
  so.tail_eps = 1e-4 * opts_.abs_tol;
  segments_ = effective_segments(model_, so);
}

const BcfOracle::PanelRule& BcfOracle::rule_for(double tmax) const {
  const double bucket = std::exp2(std::ceil(std::log2(std::max(std::abs(tmax), 1.0))));
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(bucket);
  if (it == cache_.end()) {
    it = cache_.emplace(bucket, std::make_unique<PanelRule>(build_rule(bucket))).first;
  }
  return *it->second;
}

BcfOracle::PanelRule BcfOracle::build_rule(double tmax) const {
  PanelRule rule;
  const double tol = opts_.abs_tol;
  const bool thermal = !model_.zero_temperature() && model_.statistics != Statistics::classical;
  for (const auto& seg : segments_) {
    const double lo = seg.lo;
    const double hi = seg.hi;
    const double len = hi - lo;
    double hmax = std::min(pi / (4.0 * tmax + 1.0), len / 8.0);
    if (thermal) hmax = std::min(hmax, pi / model_.beta);
    const double d = std::min(hmax, len / 4.0);

    std::vector<Panel> panels;
    const int depth_lo = grading_depth(seg.order_lo, tol);
    const int depth_hi = grading_depth(seg.order_hi, tol);
    for (int k = 0; k < depth_lo; ++k) panels.push_back({d * std::exp2(-k - 1), d * std::exp2(-k), false});
    panels.push_back({0.0, d * std::exp2(-depth_lo), false});
    for (int k = 0; k < depth_hi; ++k) panels.push_back({d * std::exp2(-k - 1), d * std::exp2(-k), true});
    panels.push_back({0.0, d * std::exp2(-depth_hi), true});
    const double mid = len - 2.0 * d;
    if (mid > 0.0) {
      const auto m = static_cast<std::size_t>(std::ceil(mid / hmax));
      const double w = mid / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double s0 = d + w * static_cast<double>(i);
        panels.push_back({s0, i + 1 == m ? len - d : s0 + w, false});
      }
    }

    for (const auto& panel : panels) {
      const double c = 0.5 * (panel.s0 + panel.s1);
      const double hw = 0.5 * (panel.s1 - panel.s0);
      for (const auto& node : kNodes) {
        const double s = c + hw * node.x;
        FrequencyPoint fp = panel.from_hi ? FrequencyPoint{cplx(hi - s, 0.0), cplx(len - s, 0.0), cplx(s, 0.0)}
                                          : FrequencyPoint{cplx(lo + s, 0.0), cplx(s, 0.0), cplx(len - s, 0.0)};
        const cplx f = seg.eval(fp);
        rule.omega.push_back(fp.omega.real());
        rule.weight.push_back(hw * node.wk * f);
        rule.difference.push_back(hw * (node.wk - node.wg) * f);
      }
    }
  }
  return rule;
}

double BcfOracle::estimate(const PanelRule& rule, double t) const {
  double total = 0.0;
  for (std::size_t p = 0; p < rule.omega.size(); p += kNodes.size()) {
    cplx s = 0.0;
    for (std::size_t k = p; k < p + kNodes.size(); ++k) s += rule.difference[k] * std::exp(cplx(0.0, -rule.omega[k] * t));
    total += std::abs(s);
  }
  return total;
}

OracleValue BcfOracle::evaluate(double t) const {
  if (closed_) return OracleValue{(*closed_)(t), 0.0, false};
  const PanelRule& rule = rule_for(t);
  cplx sum = 0.0;
  for (std::size_t k = 0; k < rule.omega.size(); ++k) sum += rule.weight[k] * std::exp(cplx(0.0, -rule.omega[k] * t));
  const double err = estimate(rule, t);
  return OracleValue{sum, err, err > opts_.abs_tol};
}

std::vector<cplx> BcfOracle::grid(double dt, std::size_t n, double* error_estimate) const {
  require(n >= 1, "oracle grid: empty grid");
  require(dt > 0.0, "oracle grid: dt must be > 0");
  std::vector<cplx> out(n);
  if (closed_) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) out[k] = (*closed_)(static_cast<double>(k) * dt);
    if (error_estimate) *error_estimate = 0.0;
    return out;
  }
  const double tmax = dt * static_cast<double>(n - 1);
  const PanelRule& rule = rule_for(tmax);
  std::vector<SoeTerm> terms(rule.omega.size());
  for (std::size_t k = 0; k < terms.size(); ++k) terms[k] = {rule.weight[k], cplx(rule.omega[k], 0.0)};
  kernels::soe_uniform(terms, dt, out);
  if (error_estimate) {
    double e = 0.0;
    for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) e = std::max(e, estimate(rule, frac * tmax));
    *error_estimate = e;
  }
  return out;
}

std::size_t BcfOracle::node_count(double tmax) const { return rule_for(tmax).omega.size(); }

cplx bcf_reference(const BcfOracle& oracle, double t) { return oracle.evaluate(t).value; }

TailL1 tail_l1(const SpectralModel& model, double T, double abs_tol) {
  require(T > 0.0, "tail_l1: T must be > 0");
  model.validate();

  // Exact route: ohmic closed forms have a non-oscillating modulus, so
  // substitute t = T/u and integrate over u in (0, 1].
  const auto cf = closed_form(model);
  if (cf && model.base.family == DensityFamily::ohmic) {
    const double g = model.base.params[0];
    const double wc = model.base.params[1];
    const double gam = std::tgamma(g + 1.0);
    auto f = [&](double u) {
      return gam * T * std::pow(u, g - 1.0) * std::pow(u * u + wc * wc * T * T, -(g + 1.0) / 2.0);
    };
    double total = 0.0;
    const int depth = grading_depth(g - 1.0, abs_tol);
    auto panel = [&](double a, double b) {
      const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
      double s = 0.0;
      for (const auto& node : kNodes) s += node.wk * f(c + hw * node.x);
      return s * hw;
    };
    for (int k = 0; k < depth; ++k) total += panel(std::exp2(-k - 1), std::exp2(-k));
    return TailL1{total, false};
  }

  // Integrate |Delta| over [T, 10 T] on a grid, then extrapolate with the
  // decay envelope (1 + t)^{-(1 + alpha)}.
  double alpha = inf;
  SegmentOptions so;
  so.tail_eps = 1e-4 * abs_tol;
  const auto segs = effective_segments(model, so);
  double wmax = 0.0;
  for (const auto& s : segs) {
    alpha = std::min(alpha, s.order());
    wmax = std::max({wmax, std::abs(s.lo), std::abs(s.hi)});
  }
  if (alpha <= 0.0) return TailL1{inf, true};

  const double dt = std::min(0.1, pi / (8.0 * wmax + 1.0));
  const double t_end = 10.0 * T;
  const std::size_t n = grid_count(t_end, dt);
  std::vector<cplx> values;
  if (cf) {
    values.resize(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = (*cf)(static_cast<double>(k) * dt);
  } else {
    BcfOracle oracle(model, OracleOptions{abs_tol, true});
    values = oracle.grid(dt, n);
  }
  const auto k0 = static_cast<std::size_t>(std::ceil(T / dt));
  double total = 0.0;
  for (std::size_t k = k0; k + 1 < n; ++k) total += 0.5 * (std::abs(values[k]) + std::abs(values[k + 1])) * dt;
  double env = 0.0;
  for (std::size_t k = n - n / 10; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    env = std::max(env, std::abs(values[k]) * std::pow(1.0 + t, 1.0 + alpha));
  }
  total += env * std::pow(1.0 + t_end, -alpha) / alpha;
  return TailL1{total, true};
}

}  // namespace soebath
