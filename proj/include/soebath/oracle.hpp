#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "soebath/common.hpp"
#include "soebath/spectral.hpp"

namespace soebath {

struct OracleOptions {
  /// Target absolute accuracy of the panel rule. Ignored when a closed form is used.
  double abs_tol = 1e-10;
  bool use_closed_form = true;
};

struct OracleValue {
  cplx value;
  double error_estimate = 0.0;
  /// Set when the error estimate exceeds abs_tol.
  bool flagged = false;
};

/// Closed-form Delta(t) for models that have one:
///   ohmic (boson at beta = inf, or classical)  Gamma(g+1) (1 + i wc t)^{-(g+1)}
///   step (classical, or fermion at beta = inf)  (e^{-iat} - e^{-ibt}) / (it)
///   semicircle (classical)                      m pi wD J1(wD t) / t
///   inverse_sqrt_edges (classical)              e^{-ict} J0(r t)
std::optional<ScalarReference> closed_form(const SpectralModel& model);

/// Reference Delta(t) = int J_eff(w) e^{-iwt} dw by Gauss-Kronrod panels on the
/// real axis, graded geometrically toward every segment endpoint.
class BcfOracle {
 public:
  explicit BcfOracle(SpectralModel model, OracleOptions opts = {});

  const SpectralModel& model() const { return model_; }
  const std::vector<AnalyticSegment>& segments() const { return segments_; }
  double abs_tol() const { return opts_.abs_tol; }
  bool has_closed_form() const { return closed_.has_value(); }

  OracleValue evaluate(double t) const;
  cplx operator()(double t) const { return evaluate(t).value; }

  /// Delta(k dt) for k < n. The error estimate is the largest of the
  /// per-time estimates at a handful of probe times.
  std::vector<cplx> grid(double dt, std::size_t n, double* error_estimate = nullptr) const;

  /// Quadrature nodes used for |t| <= tmax (for inspection and tests).
  std::size_t node_count(double tmax) const;

 private:
  struct PanelRule {
    std::vector<double> omega;
    std::vector<cplx> weight;      // Kronrod weight times J_eff
    std::vector<cplx> difference;  // (Kronrod - Gauss) weight times J_eff
  };

  const PanelRule& rule_for(double tmax) const;
  PanelRule build_rule(double tmax) const;
  double estimate(const PanelRule& rule, double t) const;

  SpectralModel model_;
  OracleOptions opts_;
  std::vector<AnalyticSegment> segments_;
  std::optional<ScalarReference> closed_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::unique_ptr<PanelRule>> cache_;
};

/// Free-function form of BcfOracle::evaluate.
cplx bcf_reference(const BcfOracle& oracle, double t);

struct TailL1 {
  double value = 0.0;
  /// True when the envelope (1 + t)^{-(1 + alpha)} was used beyond 10 T.
  bool extrapolated = false;
};

/// int_T^inf |Delta(t)| dt. Infinite (and flagged) when the decay class alpha <= 0.
TailL1 tail_l1(const SpectralModel& model, double T, double abs_tol = 1e-10);

}  // namespace soebath
