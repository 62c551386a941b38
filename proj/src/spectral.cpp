#include "soebath/spectral.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace soebath {

namespace {

constexpr double kPoleGuard = 1e-3;

bool same_point(double a, double b) { return a == b; }

// Restricts `parent` to [lo, hi] (a sub-interval). Offsets are translated so the
// parent evaluator still sees accurate distances to its own endpoints.
AnalyticSegment restrict_segment(const AnalyticSegment& parent, double lo, double hi) {
  AnalyticSegment seg;
  seg.lo = lo;
  seg.hi = hi;
  seg.theta0_certified = parent.theta0_certified;
  const double shift_lo = lo - parent.lo;
  const double shift_hi = parent.hi - hi;
  const bool hi_finite = std::isfinite(parent.hi);
  seg.eval = [inner = parent.eval, shift_lo, shift_hi, hi_finite](const FrequencyPoint& p) {
    FrequencyPoint q{p.omega, p.from_lo + shift_lo, hi_finite ? p.to_hi + shift_hi : cplx(inf, 0.0)};
    return inner(q);
  };
  if (same_point(lo, parent.lo)) {
    seg.order_lo = parent.order_lo;
    seg.log_lo = parent.log_lo;
  } else {
    seg.order_lo = 0.0;
    seg.log_lo = true;
  }
  if (same_point(hi, parent.hi)) {
    seg.order_hi = parent.order_hi;
    seg.log_hi = parent.log_hi;
  } else {
    seg.order_hi = 0.0;
    seg.log_hi = true;
  }
  return seg;
}

AnalyticSegment segment_from_piece(const DensityPiece& piece) {
  AnalyticSegment seg;
  seg.lo = piece.lo;
  seg.hi = piece.hi;
  seg.eval = piece.eval;
  seg.order_lo = piece.order_lo;
  seg.order_hi = piece.order_hi;
  seg.log_lo = piece.log_lo;
  seg.log_hi = piece.log_hi;
  return seg;
}

// omega - anchor, computed from whichever offset is exact at the anchor.
cplx offset_from(const FrequencyPoint& p, double lo, double hi, double anchor) {
  if (anchor == lo) return p.from_lo;
  if (anchor == hi) return -p.to_hi;
  return p.omega - anchor;
}

void check_fermi_pole(cplx x_omega, double beta, double margin) {
  // poles of 1/(e^{beta x} + 1) at x = i pi (2n+1) / beta
  const double n = std::round((beta * x_omega.imag() / pi - 1.0) / 2.0);
  const cplx pole(0.0, pi * (2.0 * n + 1.0) / beta);
  if (std::abs(x_omega - pole) < kPoleGuard * margin) {
    throw PoleProximityError("evaluation point within guard distance of a Matsubara pole");
  }
}

void check_bose_pole(cplx omega, double beta, double margin) {
  // poles of 1/(1 - e^{-beta w}) at w = 2 pi i n / beta, n != 0 (n = 0 is the segment endpoint)
  double n = std::round(beta * omega.imag() / (2.0 * pi));
  if (n == 0.0) n = omega.imag() >= 0.0 ? 1.0 : -1.0;
  const cplx pole(0.0, 2.0 * pi * n / beta);
  if (std::abs(omega - pole) < kPoleGuard * margin) {
    throw PoleProximityError("evaluation point within guard distance of a bosonic Matsubara pole");
  }
}

cplx tanh_point(double x, double y) { return std::tanh(cplx(x, -y)); }

void probe_segment(const AnalyticSegment& seg, double theta0) {
  const double ymax = pi / 4 - theta0;
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (int i = -8; i <= 8; ++i) {
      const double x = 0.75 * i;
      const cplx w = tanh_point(x, frac * ymax);
      // accurate offsets to the ends of [-1, 1]
      const cplx e = std::exp(cplx(-2.0 * x, 2.0 * frac * ymax));
      const cplx one_minus = 2.0 * e / (1.0 + e);
      const cplx one_plus = 2.0 / (1.0 + e);
      const double half = seg.half_width();
      FrequencyPoint p{half * w + seg.midpoint(), half * one_plus, half * one_minus};
      cplx v;
      try {
        v = seg.eval(p);
      } catch (const PoleProximityError& ex) {
        throw Error(std::string("probe failure: segment evaluator not analytic for theta0: ") + ex.what());
      }
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw Error("probe failure: segment evaluator returned a non-finite value inside the analyticity region");
      }
    }
  }
}

double tail_gamma(const SpectralModel& model) {
  return model.base.tail ? model.base.tail->exponent : 0.0;
}

}  // namespace

FrequencyPoint real_point(double omega, double lo, double hi) {
  return FrequencyPoint{cplx(omega, 0.0), cplx(omega - lo, 0.0),
                        std::isfinite(hi) ? cplx(hi - omega, 0.0) : cplx(inf, 0.0)};
}

std::string to_string(Norm norm) { return norm == Norm::L1 ? "l1" : "linf"; }

Norm norm_from_string(const std::string& s) {
  if (s == "l1" || s == "L1") return Norm::L1;
  if (s == "linf" || s == "Linf" || s == "LINF") return Norm::Linf;
  throw Error("unknown norm '" + s + "' (expected l1 or linf)");
}

std::string to_string(DensityFamily family) {
  switch (family) {
    case DensityFamily::ohmic: return "ohmic";
    case DensityFamily::semicircle: return "semicircle";
    case DensityFamily::inverse_sqrt_edges: return "inverse_sqrt_edges";
    case DensityFamily::log_model: return "log_model";
    case DensityFamily::step: return "step";
    case DensityFamily::fractional: return "fractional";
  }
  return "?";
}

DensityFamily density_family_from_string(const std::string& name) {
  static const std::array<DensityFamily, 6> all = {DensityFamily::ohmic,      DensityFamily::semicircle,
                                                   DensityFamily::inverse_sqrt_edges, DensityFamily::log_model,
                                                   DensityFamily::step,       DensityFamily::fractional};
  for (auto f : all) {
    if (to_string(f) == name) return f;
  }
  throw Error("unknown density preset '" + name + "'");
}

std::string to_string(Statistics s) {
  switch (s) {
    case Statistics::boson: return "boson";
    case Statistics::fermion: return "fermion";
    case Statistics::classical: return "classical";
  }
  return "?";
}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::lesser: return "lesser";
    case Branch::greater: return "greater";
    case Branch::total: return "total";
  }
  return "?";
}

Statistics statistics_from_string(const std::string& s) {
  if (s == "boson") return Statistics::boson;
  if (s == "fermion") return Statistics::fermion;
  if (s == "classical") return Statistics::classical;
  throw Error("unknown statistics '" + s + "'");
}

Branch branch_from_string(const std::string& s) {
  if (s == "lesser") return Branch::lesser;
  if (s == "greater") return Branch::greater;
  if (s == "total") return Branch::total;
  throw Error("unknown branch '" + s + "'");
}

double BaseDensity::operator()(double omega) const {
  for (const auto& piece : pieces) {
    if (omega >= piece.lo && omega <= piece.hi) {
      return piece.eval(real_point(omega, piece.lo, piece.hi)).real();
    }
  }
  return 0.0;
}

BaseDensity make_preset(DensityFamily family, const std::vector<double>& params) {
  BaseDensity d;
  d.family = family;
  d.params = params;
  auto need = [&](std::size_t n) {
    if (params.size() != n) {
      throw Error(to_string(family) + " expects " + std::to_string(n) + " parameters, got " +
                  std::to_string(params.size()));
    }
  };
  auto interval = [&]() {
    need(2);
    if (!(params[0] < params[1])) throw Error(to_string(family) + ": requires a < b");
    return std::pair{params[0], params[1]};
  };

  switch (family) {
    case DensityFamily::ohmic: {
      need(2);
      const double gamma = params[0];
      const double wc = params[1];
      if (!(gamma > 0.0)) throw Error("ohmic: gamma must be > 0");
      if (!(wc > 0.0)) throw Error("ohmic: omega_c must be > 0");
      const double norm = std::pow(wc, -(gamma + 1.0));
      DensityPiece p;
      p.lo = 0.0;
      p.hi = inf;
      p.order_lo = gamma;
      p.order_hi = 0.0;
      p.eval = [gamma, wc, norm](const FrequencyPoint& q) {
        return norm * std::pow(q.from_lo, gamma) * std::exp(-q.from_lo / wc);
      };
      d.pieces.push_back(std::move(p));
      d.tail = ExponentialTail{wc, gamma};
      d.characteristic_frequency = wc;
      break;
    }
    case DensityFamily::semicircle: {
      need(2);
      const double wd = params[0];
      const double m = params[1];
      if (!(wd > 0.0) || !(m > 0.0)) throw Error("semicircle: omega_D and m must be > 0");
      DensityPiece p;
      p.lo = -wd;
      p.hi = wd;
      p.order_lo = p.order_hi = 0.5;
      p.eval = [m](const FrequencyPoint& q) { return m * std::sqrt(q.from_lo) * std::sqrt(q.to_hi); };
      d.pieces.push_back(std::move(p));
      d.characteristic_frequency = wd;
      break;
    }
    case DensityFamily::inverse_sqrt_edges: {
      auto [a, b] = interval();
      DensityPiece p;
      p.lo = a;
      p.hi = b;
      p.order_lo = p.order_hi = -0.5;
      p.eval = [](const FrequencyPoint& q) { return 1.0 / (pi * std::sqrt(q.from_lo) * std::sqrt(q.to_hi)); };
      d.pieces.push_back(std::move(p));
      d.characteristic_frequency = 0.5 * (b - a);
      break;
    }
    case DensityFamily::log_model: {
      auto [a, b] = interval();
      const double c = 0.5 * (a + b);
      const double r = 0.5 * (b - a);
      const double width = b - a;
      DensityPiece left;
      left.lo = a;
      left.hi = c;
      left.order_lo = 1.0;
      left.order_hi = 0.0;
      left.log_hi = true;
      left.eval = [r, width](const FrequencyPoint& q) {
        // distance to the centre is to_hi; the cutoff (1 - u^2) factors as (1 + d/r)(from_lo/r)
        return std::log(width / q.to_hi) * (1.0 + q.to_hi / r) * (q.from_lo / r);
      };
      DensityPiece right;
      right.lo = c;
      right.hi = b;
      right.order_lo = 0.0;
      right.log_lo = true;
      right.order_hi = 1.0;
      right.eval = [r, width](const FrequencyPoint& q) {
        return std::log(width / q.from_lo) * (1.0 + q.from_lo / r) * (q.to_hi / r);
      };
      d.pieces.push_back(std::move(left));
      d.pieces.push_back(std::move(right));
      d.characteristic_frequency = r;
      break;
    }
    case DensityFamily::step: {
      auto [a, b] = interval();
      DensityPiece p;
      p.lo = a;
      p.hi = b;
      p.order_lo = p.order_hi = 0.0;
      p.log_lo = p.log_hi = true;
      p.eval = [](const FrequencyPoint&) { return cplx(1.0, 0.0); };
      d.pieces.push_back(std::move(p));
      d.characteristic_frequency = 0.5 * (b - a);
      break;
    }
    case DensityFamily::fractional: {
      need(2);
      const double gnu = params[0];
      const double nu = params[1];
      if (!(gnu > 0.0)) throw Error("fractional: gamma_nu must be > 0");
      if (!(nu > 0.0 && nu < 1.0)) throw Error("fractional: nu must lie in (0, 1)");
      const double amp = 2.0 * gnu * std::sin(pi * nu / 2.0);
      DensityPiece left;
      left.lo = -inf;
      left.hi = 0.0;
      left.order_hi = nu - 1.0;
      left.eval = [amp, nu](const FrequencyPoint& q) { return amp * std::pow(q.to_hi, nu - 1.0); };
      DensityPiece right;
      right.lo = 0.0;
      right.hi = inf;
      right.order_lo = nu - 1.0;
      right.eval = [amp, nu](const FrequencyPoint& q) { return amp * std::pow(q.from_lo, nu - 1.0); };
      d.pieces.push_back(std::move(left));
      d.pieces.push_back(std::move(right));
      d.characteristic_frequency = 1.0;
      break;
    }
  }

  // Non-negativity on a sample of interior points.
  for (const auto& piece : d.pieces) {
    const double lo = std::isfinite(piece.lo) ? piece.lo : -50.0 * d.characteristic_frequency;
    const double hi = std::isfinite(piece.hi) ? piece.hi : 50.0 * d.characteristic_frequency;
    for (int i = 1; i < 64; ++i) {
      const double w = lo + (hi - lo) * i / 64.0;
      const double v = piece.eval(real_point(w, piece.lo, piece.hi)).real();
      if (v < 0.0) throw Error(to_string(family) + ": density is negative inside its support");
    }
  }
  return d;
}

BaseDensity make_preset(const std::string& name, const std::vector<double>& params) {
  return make_preset(density_family_from_string(name), params);
}

void SpectralModel::validate() const {
  require(!base.pieces.empty(), "spectral model has an empty density");
  require(beta > 0.0, "beta must be > 0");
  switch (statistics) {
    case Statistics::boson:
      require(branch == Branch::total, "bosonic models use the total branch");
      require(mu == 0.0, "bosonic models require mu = 0");
      require(base.support_lo() >= 0.0, "bosonic density support must lie in [0, inf)");
      break;
    case Statistics::fermion:
      require(branch != Branch::total, "fermionic models use the lesser or greater branch");
      break;
    case Statistics::classical:
      break;
  }
}

bool AnalyticSegment::log_flag() const {
  const double a = order();
  if (a == 0.0) return true;
  return (order_lo == a && log_lo) || (order_hi == a && log_hi);
}

cplx expm1(cplx x) {
  if (std::abs(x) < 0.5) {
    // e^x - 1 = 2 e^{x/2} sinh(x/2); sinh of a small argument is accurate
    return 2.0 * std::exp(0.5 * x) * std::sinh(0.5 * x);
  }
  return std::exp(x) - 1.0;
}

cplx fermi_factor(cplx x) {
  if (x.real() > 0.0) {
    const cplx e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (std::exp(x) + 1.0);
}

cplx bose_factor(cplx x) { return -1.0 / expm1(-x); }

cplx tail_cutoff_factor(cplx w_minus_omega, double cutoff, double scale) {
  return expm1(-w_minus_omega / scale) / expm1(cplx(-cutoff / scale, 0.0));
}

double matsubara_margin(double beta, double /*mu*/, double theta0) {
  require(beta > 0.0, "matsubara_margin: beta must be > 0");
  require(theta0 > 0.0 && theta0 < pi / 4, "matsubara_margin: theta0 must lie in (0, pi/4)");
  if (std::isinf(beta)) return 0.0;
  return pi / beta * std::sin(2.0 * theta0);
}

double effective_density(const SpectralModel& model, double omega, std::optional<double> cutoff) {
  auto base = [&](double w) {
    double j = model.base(w);
    if (cutoff && model.base.tail) {
      if (w >= *cutoff) return 0.0;
      j *= tail_cutoff_factor(cplx(*cutoff - w, 0.0), *cutoff, model.base.tail->scale).real();
    }
    return j;
  };
  switch (model.statistics) {
    case Statistics::classical: return base(omega);
    case Statistics::fermion: {
      const double x = omega - model.mu;
      double occ;
      if (model.zero_temperature()) {
        occ = x < 0.0 ? 1.0 : (x > 0.0 ? 0.0 : 0.5);
      } else {
        occ = fermi_factor(cplx(model.beta * x, 0.0)).real();
      }
      return base(omega) * (model.branch == Branch::lesser ? occ : 1.0 - occ);
    }
    case Statistics::boson: {
      if (model.zero_temperature()) return omega > 0.0 ? base(omega) : 0.0;
      if (omega == 0.0) return 0.0;
      const double b = bose_factor(cplx(model.beta * omega, 0.0)).real();
      return omega > 0.0 ? base(omega) * b : -base(-omega) * b;
    }
  }
  return 0.0;
}

std::optional<double> auto_cutoff(const SpectralModel& model, double tail_eps, std::optional<double> horizon) {
  if (!model.base.tail) return std::nullopt;
  require(tail_eps > 0.0, "tail truncation budget must be > 0");
  const double wc = model.base.tail->scale;
  const double w0 = 10.0 * wc;
  const double c_hat = 10.0 * std::abs(effective_density(model, w0));
  double factor = 1.0;
  if (model.statistics == Statistics::boson && !model.zero_temperature() && tail_gamma(model) <= 1.0 && horizon) {
    factor = std::log1p(*horizon) / model.beta;
  }
  if (!(c_hat > 0.0)) return w0;
  const double w = 2.0 * wc * std::log(10.0 * c_hat * factor / tail_eps);
  return std::max(w, w0);
}

std::vector<AnalyticSegment> effective_segments(const SpectralModel& model, const SegmentOptions& opts) {
  model.validate();
  require(opts.theta0 > 0.0 && opts.theta0 < pi / 4, "theta0 must lie in (0, pi/4)");
  require(opts.tail_eps > 0.0, "tail_eps must be > 0");

  const bool fermion = model.statistics == Statistics::fermion;
  const bool boson = model.statistics == Statistics::boson;
  const bool zero_t = model.zero_temperature();

  std::optional<double> cutoff = opts.cutoff;
  if (!cutoff && model.base.tail) cutoff = auto_cutoff(model, opts.tail_eps, opts.horizon);

  // Stage 1: finite base segments (zero-temperature fermion clipping, tail truncation).
  std::vector<AnalyticSegment> base_segments;
  for (const auto& piece : model.base.pieces) {
    AnalyticSegment seg = segment_from_piece(piece);
    double lo = piece.lo;
    double hi = piece.hi;
    if (fermion && zero_t) {
      if (model.branch == Branch::lesser) hi = std::min(hi, model.mu);
      else lo = std::max(lo, model.mu);
      if (!(lo < hi)) continue;
    }
    if (!std::isfinite(lo)) throw Error("density support is unbounded below; no truncation rule applies");
    if (!std::isfinite(hi)) {
      if (!model.base.tail) throw Error("density support is unbounded without an exponential tail");
      const double w = *cutoff;
      require(w > lo, "tail cutoff W must exceed the start of the last piece");
      const double scale = model.base.tail->scale;
      AnalyticSegment truncated;
      truncated.lo = piece.lo;
      truncated.hi = w;
      truncated.order_lo = piece.order_lo;
      truncated.log_lo = piece.log_lo;
      truncated.order_hi = 1.0;  // chi_W vanishes linearly at W
      truncated.log_hi = false;
      truncated.eval = [inner = piece.eval, w, scale](const FrequencyPoint& p) {
        FrequencyPoint q{p.omega, p.from_lo, cplx(inf, 0.0)};
        return inner(q) * tail_cutoff_factor(p.to_hi, w, scale);
      };
      seg = std::move(truncated);
      hi = std::min(hi, w);
      if (!(lo < hi)) continue;
    }
    if (lo != seg.lo || hi != seg.hi) seg = restrict_segment(seg, lo, hi);
    base_segments.push_back(std::move(seg));
  }
  require(!base_segments.empty(), "effective density has empty support");

  std::vector<AnalyticSegment> out;
  const double margin = matsubara_margin(model.beta, model.mu, opts.theta0);

  if (model.statistics == Statistics::classical || (fermion && zero_t) || (boson && zero_t)) {
    out = std::move(base_segments);
  } else if (fermion) {
    const double beta = model.beta;
    const double mu = model.mu;
    const bool lesser = model.branch == Branch::lesser;
    for (const auto& seg : base_segments) {
      std::vector<AnalyticSegment> parts;
      if (seg.lo < mu && mu < seg.hi) {
        parts.push_back(restrict_segment(seg, seg.lo, mu));
        parts.push_back(restrict_segment(seg, mu, seg.hi));
      } else {
        parts.push_back(seg);
      }
      for (auto& part : parts) {
        const double lo = part.lo;
        const double hi = part.hi;
        part.eval = [inner = part.eval, lo, hi, mu, beta, margin, lesser](const FrequencyPoint& p) {
          const cplx x = offset_from(p, lo, hi, mu);
          check_fermi_pole(x, beta, margin);
          const cplx occ = fermi_factor(lesser ? beta * x : -beta * x);
          return inner(p) * occ;
        };
        out.push_back(std::move(part));
      }
    }
  } else {
    // finite-temperature boson: positive segments plus their omega < 0 mirrors
    const double beta = model.beta;
    std::vector<AnalyticSegment> mirrors;
    for (const auto& seg : base_segments) {
      AnalyticSegment pos = seg;
      const double lo = seg.lo;
      pos.eval = [inner = seg.eval, lo, beta, margin](const FrequencyPoint& p) {
        const cplx w = lo == 0.0 ? p.from_lo : p.omega;
        check_bose_pole(w, beta, margin);
        return inner(p) * bose_factor(beta * w);
      };
      if (lo == 0.0) {
        pos.order_lo = seg.order_lo - 1.0;
        require(pos.order_lo > -1.0, "bosonic finite-temperature order at 0 must exceed -1 (need gamma > 0)");
      }

      AnalyticSegment neg;
      neg.lo = -seg.hi;
      neg.hi = -seg.lo;
      neg.theta0_certified = seg.theta0_certified;
      neg.order_lo = seg.order_hi;
      neg.log_lo = seg.log_hi;
      neg.order_hi = seg.lo == 0.0 ? seg.order_lo - 1.0 : seg.order_lo;
      neg.log_hi = seg.log_lo;
      const double nhi = neg.hi;
      neg.eval = [inner = seg.eval, nhi, beta, margin](const FrequencyPoint& p) {
        // J(-w): the parent's offsets are the mirrored ones
        FrequencyPoint q{-p.omega, p.to_hi, p.from_lo};
        const cplx w = nhi == 0.0 ? -p.to_hi : p.omega;
        check_bose_pole(w, beta, margin);
        return -inner(q) * bose_factor(beta * w);
      };
      out.push_back(std::move(pos));
      mirrors.push_back(std::move(neg));
    }
    for (auto it = mirrors.rbegin(); it != mirrors.rend(); ++it) out.insert(out.begin(), std::move(*it));
  }

  for (auto& seg : out) {
    require(seg.order_lo > -1.0 && seg.order_hi > -1.0, "segment endpoint orders must exceed -1");
    seg.theta0_certified = opts.theta0;
    probe_segment(seg, opts.theta0);
  }
  return out;
}

}  // namespace soebath
