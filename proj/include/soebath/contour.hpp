#pragma once

#include <optional>
#include <vector>

#include "soebath/common.hpp"
#include "soebath/soe.hpp"
#include "soebath/spectral.hpp"

namespace soebath {

/// Trapezoidal rule on the line Im z = -y2 of the strip image of [-1, 1] under w = tanh z.
struct QuadratureParams {
  double theta0 = pi / 12;
  double theta1 = pi / 12;
  double h = 0.5;
  double M = 1.0;
  double kappa = 1.0;

  double y2() const { return 0.5 * (theta1 + pi / 4 - theta0); }
  double a() const { return 0.5 * (pi / 4 - theta0 - theta1); }
  /// Discretisation rate 2 pi a.
  double c() const { return 2.0 * pi * a(); }
  long half_count() const;
  std::size_t node_count() const { return 2 * static_cast<std::size_t>(half_count()) + 1; }
  void validate() const;
};

/// Step and truncation for a segment of order alpha with dimensionless
/// accuracy target eps on the dimensionless horizon T.
QuadratureParams select_params(double alpha, bool log_flag, double eps, double T, Norm norm = Norm::L1,
                               double theta0 = pi / 12, double theta1 = pi / 12, double kappa = 1.0);

/// Nodes, frequencies and weights of one segment's quadrature.
struct SegmentSoeBuild {
  QuadratureParams params;
  std::vector<cplx> nodes;        // z_n = n h - i y2
  std::vector<cplx> frequencies;  // poles W_half tanh z_n + w_m
  std::vector<cplx> weights;      // h W_half J_eff / cosh^2 z_n
  double half_width = 1.0;
  double midpoint = 0.0;

  SoeRepresentation soe(double horizon) const;
};

SegmentSoeBuild build_segment(const AnalyticSegment& segment, const QuadratureParams& params);
SoeRepresentation build_segment_soe(const AnalyticSegment& segment, const QuadratureParams& params, double horizon);

struct BuildOptions {
  Norm norm = Norm::L1;
  double theta0 = pi / 12;
  double theta1 = pi / 12;
  double kappa = 1.0;
  bool refine = true;
  int max_rounds = 8;
  /// Grid step of the error measurement.
  double dt = 0.01;
  /// Fraction of eps given to tail truncation; the rest is split equally over segments.
  double tail_share = 0.1;
  std::optional<double> cutoff;
  double oracle_tol = 1e-10;
};

struct BuildResult {
  SoeRepresentation soe;
  std::vector<QuadratureParams> params;  // one per segment, after refinement
  std::vector<AnalyticSegment> segments;
  /// Measured error against the oracle; unset when refine is off.
  std::optional<double> achieved_error;
  bool converged = true;
  int rounds = 0;
};

/// SOE of the BCF of `model` on [0, T] with accuracy eps in the chosen norm.
BuildResult build_bcf_soe(const SpectralModel& model, double eps, double T, const BuildOptions& opts = {});

}  // namespace soebath
