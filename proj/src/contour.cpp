#include "soebath/contour.hpp"

#include <algorithm>
#include <cmath>

#include "soebath/oracle.hpp"

namespace soebath {

long QuadratureParams::half_count() const { return static_cast<long>(std::floor(M / h)); }

void QuadratureParams::validate() const {
  require(theta0 > 0.0, "theta0 must be > 0");
  require(theta1 > 0.0 && theta1 < pi / 4 - theta0, "theta1 must lie in (0, pi/4 - theta0)");
  require(h > 0.0 && h < 1.0, "quadrature step h must lie in (0, 1)");
  require(M >= 1.0, "truncation M must be >= 1");
  require(kappa > 0.0, "kappa must be > 0");
}

QuadratureParams select_params(double alpha, bool log_flag, double eps, double T, Norm norm, double theta0,
                               double theta1, double kappa) {
  require(alpha > -1.0, "singularity order must exceed -1");
  require(eps > 0.0, "eps must be > 0");
  require(T > 0.0, "T must be > 0");
  require(kappa > 0.0, "kappa must be > 0");
  require(theta0 > 0.0 && theta1 > 0.0 && theta0 + theta1 < pi / 4, "need theta0, theta1 > 0 and theta0 + theta1 < pi/4");

  QuadratureParams p;
  p.theta0 = theta0;
  p.theta1 = theta1;
  p.kappa = kappa;
  const double K = kappa;
  const double c = p.c();
  const bool log_class = log_flag || alpha == 0.0;
  double M = 0.0;
  double inv_h = 0.0;
  if (norm == Norm::L1) {
    if (log_class) {
      M = std::log(2.0 * K * T / eps);
      const double lt = std::log(2.0 + T);
      inv_h = std::log(2.0 * K * lt * lt / eps) / c;
    } else if (alpha > 0.0) {
      M = std::log(2.0 * (alpha + 1.0) * K / (alpha * eps)) / alpha;
      inv_h = std::log(2.0 * K / (alpha * eps)) / c;
    } else {
      const double b = -alpha;
      M = std::log(2.0 * K * T / eps) / (alpha + 1.0);
      inv_h = std::log(2.0 * K * std::pow(1.0 + T, b) / (b * eps)) / c;
    }
  } else {
    const double l = std::log(2.0 * K / eps);
    M = log_class ? l : l / (alpha + 1.0);
    inv_h = l / c;
  }
  p.M = std::max(M, 1.0);
  p.h = inv_h > 2.0 ? 1.0 / inv_h : 0.5;
  return p;
}

SegmentSoeBuild build_segment(const AnalyticSegment& segment, const QuadratureParams& params) {
  params.validate();
  require(std::isfinite(segment.lo) && std::isfinite(segment.hi) && segment.lo < segment.hi,
          "segment must be a finite nonempty interval");
  require(params.theta0 >= segment.theta0_certified - 1e-15,
          "contour theta0 is smaller than the segment's certified theta0");

  SegmentSoeBuild b;
  b.params = params;
  b.half_width = segment.half_width();
  b.midpoint = segment.midpoint();
  const double W = b.half_width;
  const double y = params.y2();
  const long n_half = params.half_count();
  for (long n = -n_half; n <= n_half; ++n) {
    const double x = static_cast<double>(n) * params.h;
    const cplx z(x, -y);
    // 1 -+ tanh z and sech^2 z without cancellation near either end
    cplx one_minus, one_plus, sech2;
    if (x >= 0.0) {
      const cplx q = std::exp(-2.0 * z);
      one_minus = 2.0 * q / (1.0 + q);
      one_plus = 2.0 / (1.0 + q);
      sech2 = 4.0 * q / ((1.0 + q) * (1.0 + q));
    } else {
      const cplx p = std::exp(2.0 * z);
      one_plus = 2.0 * p / (1.0 + p);
      one_minus = 2.0 / (1.0 + p);
      sech2 = 4.0 * p / ((1.0 + p) * (1.0 + p));
    }
    const cplx w_tilde = x >= 0.0 ? 1.0 - one_minus : one_plus - 1.0;
    const FrequencyPoint fp{W * w_tilde + b.midpoint, W * one_plus, W * one_minus};
    const cplx j = segment.eval(fp);
    const cplx weight = params.h * W * j * sech2;
    if (!std::isfinite(weight.real()) || !std::isfinite(weight.imag())) {
      throw Error("non-finite quadrature weight at node n = " + std::to_string(n));
    }
    b.nodes.push_back(z);
    b.frequencies.push_back(fp.omega);
    b.weights.push_back(weight);
  }
  return b;
}

SoeRepresentation SegmentSoeBuild::soe(double horizon) const {
  std::vector<SoeTerm> terms;
  terms.reserve(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) terms.push_back({weights[k], frequencies[k]});
  return SoeRepresentation(std::move(terms), horizon, Provenance::quadrature);
}

SoeRepresentation build_segment_soe(const AnalyticSegment& segment, const QuadratureParams& params, double horizon) {
  return build_segment(segment, params).soe(horizon);
}

namespace {

SoeRepresentation assemble(const std::vector<AnalyticSegment>& segments, const std::vector<QuadratureParams>& params,
                           double T) {
  std::optional<SoeRepresentation> out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto part = build_segment_soe(segments[i], params[i], T);
    out = out ? merge(*out, part) : std::move(part);
  }
  return *out;
}

}  // namespace

BuildResult build_bcf_soe(const SpectralModel& model, double eps, double T, const BuildOptions& opts) {
  require(eps > 0.0, "eps must be > 0");
  require(T > 0.0, "T must be > 0");
  require(opts.tail_share > 0.0 && opts.tail_share < 1.0, "tail_share must lie in (0, 1)");
  require(opts.max_rounds >= 0, "max_rounds must be >= 0");

  SegmentOptions so;
  so.theta0 = opts.theta0;
  so.tail_eps = opts.tail_share * eps;
  so.cutoff = opts.cutoff;
  so.horizon = T;
  auto segments = effective_segments(model, so);

  const double eps_seg = (1.0 - opts.tail_share) * eps / static_cast<double>(segments.size());
  std::vector<QuadratureParams> params;
  for (const auto& seg : segments) {
    const double W = seg.half_width();
    const double eps_d = opts.norm == Norm::L1 ? W * eps_seg : eps_seg;
    params.push_back(select_params(seg.order(), seg.log_flag(), eps_d, W * T, opts.norm, opts.theta0, opts.theta1,
                                   opts.kappa));
  }

  SoeRepresentation soe = assemble(segments, params, T);
  BuildResult result{soe, params, segments, std::nullopt, true, 0};
  if (!opts.refine) return result;

  OracleOptions oo;
  oo.abs_tol = std::min(opts.oracle_tol, 1e-3 * eps);
  BcfOracle oracle(model, oo);
  const std::size_t n = grid_count(T, opts.dt);
  const auto reference = oracle.grid(opts.dt, n);
  auto measure = [&](const SoeRepresentation& s) {
    return opts.norm == Norm::L1 ? l1_error(s, reference, opts.dt) : linf_error(s, reference, opts.dt);
  };

  double err = measure(soe);
  double best_err = err;
  SoeRepresentation best = soe;
  std::vector<QuadratureParams> best_params = params;
  int rounds = 0;
  while (err > eps && rounds < opts.max_rounds) {
    ++rounds;
    for (auto& p : params) {
      p.h /= 1.5;
      p.M *= 1.25;
    }
    soe = assemble(segments, params, T);
    err = measure(soe);
    if (err < best_err) {
      best_err = err;
      best = soe;
      best_params = params;
    }
  }
  const bool converged = err <= eps;
  if (converged) {
    best = soe;
    best_err = err;
    best_params = params;
  }
  best.set_achieved_error(opts.norm, best_err);
  return BuildResult{best, best_params, segments, best_err, converged, rounds};
}

}  // namespace soebath
