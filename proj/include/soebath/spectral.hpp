#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "soebath/common.hpp"

namespace soebath {

/// A complex frequency together with its offsets from the two ends of the
/// interval it belongs to. Carrying the offsets separately keeps endpoint
/// singularities accurate when the point sits exponentially close to an end.
struct FrequencyPoint {
  cplx omega;
  cplx from_lo;  // omega - lo
  cplx to_hi;    // hi - omega
};

/// Real-axis point on [lo, hi].
FrequencyPoint real_point(double omega, double lo, double hi);

using DensityFn = std::function<cplx(const FrequencyPoint&)>;

/// One analytic piece of a base spectral density.
struct DensityPiece {
  double lo = 0.0;
  double hi = 0.0;  // may be +inf when the density has an exponential tail
  DensityFn eval;
  double order_lo = 0.0;
  double order_hi = 0.0;
  bool log_lo = false;
  bool log_hi = false;
};

/// |J(w)| <= C w^exponent exp(-w / scale) for large w.
struct ExponentialTail {
  double scale = 1.0;
  double exponent = 0.0;
};

enum class DensityFamily { ohmic, semicircle, inverse_sqrt_edges, log_model, step, fractional };

std::string to_string(DensityFamily family);
DensityFamily density_family_from_string(const std::string& name);

struct BaseDensity {
  DensityFamily family = DensityFamily::step;
  std::vector<double> params;
  std::vector<DensityPiece> pieces;
  std::optional<ExponentialTail> tail;
  double characteristic_frequency = 1.0;

  /// Real-axis value, zero outside the support.
  double operator()(double omega) const;
  double support_lo() const { return pieces.front().lo; }
  double support_hi() const { return pieces.back().hi; }
};

/// Builds one of the model densities.
///   ohmic(gamma, omega_c)         w^g wc^-(g+1) e^{-w/wc} on [0, inf)
///   semicircle(omega_D, m)        m sqrt(wD^2 - w^2) on |w| < wD
///   inverse_sqrt_edges(a, b)      1 / (pi sqrt((w-a)(b-w)))
///   log_model(a, b)               log((b-a)/|w-c|) (1 - ((w-c)/r)^2), c midpoint, r half width
///   step(a, b)                    1 on [a, b]
///   fractional(gamma_nu, nu)      2 gamma_nu sin(pi nu / 2) |w|^{nu-1}
BaseDensity make_preset(DensityFamily family, const std::vector<double>& params);
BaseDensity make_preset(const std::string& name, const std::vector<double>& params);

enum class Statistics { boson, fermion, classical };
enum class Branch { lesser, greater, total };

std::string to_string(Statistics s);
std::string to_string(Branch b);
Statistics statistics_from_string(const std::string& s);
Branch branch_from_string(const std::string& s);

/// A base density together with the quantum-statistics weighting that turns it
/// into an effective density. `classical` applies unit weighting (J_eff = J),
/// which is what memory kernels and bare densities use.
struct SpectralModel {
  BaseDensity base;
  Statistics statistics = Statistics::classical;
  double beta = inf;
  double mu = 0.0;
  Branch branch = Branch::total;

  void validate() const;
  bool zero_temperature() const { return std::isinf(beta); }
};

/// One analytic piece of the effective density.
struct AnalyticSegment {
  double lo = 0.0;
  double hi = 0.0;
  DensityFn eval;
  double order_lo = 0.0;
  double order_hi = 0.0;
  bool log_lo = false;
  bool log_hi = false;
  // theta0 of the region the evaluator was probed on; contours must use theta0 >= this.
  double theta0_certified = pi / 12;

  double order() const { return std::min(order_lo, order_hi); }
  /// True when the controlling endpoint is of logarithmic/jump type.
  bool log_flag() const;
  double half_width() const { return 0.5 * (hi - lo); }
  double midpoint() const { return 0.5 * (hi + lo); }
  cplx operator()(double omega) const { return eval(real_point(omega, lo, hi)); }
};

struct SegmentOptions {
  double theta0 = pi / 12;
  double tail_eps = 1e-10;
  /// Explicit cutoff W for an exponential tail; chosen automatically when unset.
  std::optional<double> cutoff;
  /// Horizon used by the finite-temperature cutoff rule for gamma <= 1.
  std::optional<double> horizon;
};

/// Splits the effective density of `model` into analytic segments on finite
/// intervals, with endpoint singularity orders attached.
std::vector<AnalyticSegment> effective_segments(const SpectralModel& model, const SegmentOptions& opts = {});

/// Tail cutoff W that effective_segments would choose for this model.
std::optional<double> auto_cutoff(const SpectralModel& model, double tail_eps,
                                  std::optional<double> horizon = std::nullopt);

/// Lower bound (pi/beta) sin(2 theta0) on the distance from the analyticity
/// region to the nearest Matsubara pole. Zero for beta = inf.
double matsubara_margin(double beta, double mu, double theta0);

/// Fermi-Dirac occupation 1/(e^x + 1) at complex x = beta (omega - mu).
cplx fermi_factor(cplx x);
/// Bose weighting 1/(1 - e^{-x}) at complex x = beta omega.
cplx bose_factor(cplx x);
/// e^x - 1 without cancellation for small |x|.
cplx expm1(cplx x);

/// Real-axis effective density, computed directly from the model (no segments).
/// With a cutoff, the exponential tail is multiplied by chi_W as in effective_segments.
double effective_density(const SpectralModel& model, double omega, std::optional<double> cutoff = std::nullopt);

/// chi_W(omega) = (1 - e^{-(W - omega)/wc}) / (1 - e^{-W/wc}), given W - omega directly.
cplx tail_cutoff_factor(cplx w_minus_omega, double cutoff, double scale);

}  // namespace soebath
