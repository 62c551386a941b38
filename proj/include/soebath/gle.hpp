#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "soebath/common.hpp"
#include "soebath/soe.hpp"
#include "soebath/spectral.hpp"

namespace soebath {

/// Memory kernel C(t) = (1/2pi) int S(w) e^{-iwt} dw with an optional SOE
/// C(t) ~ Re sum_j c_j e^{-i z_j t}.
struct MemoryKernel {
  std::string name;
  std::function<double(double)> C;
  std::function<double(double)> S;
  /// C(k dt), k < n; used by the convolution integrator.
  std::function<std::vector<double>(double dt, std::size_t n)> C_grid;
  /// Classical spectral model of S when S is integrable.
  std::optional<SpectralModel> spectrum;
  std::optional<SoeRepresentation> soe;
  std::optional<double> fit_error;
  /// Lower end of the interval on which the SOE is certified.
  double t_min = 0.0;

  std::vector<double> grid(double dt, std::size_t n) const;
};

/// Boundary-atom kernel of a harmonic chain: S(w) = m sqrt(wD^2 - w^2), wD = 2K/sqrt(m).
MemoryKernel chain_kernel(double m, double K);

/// C(t) = gamma_nu t^{-nu} / Gamma(1 - nu) with an SOE of real exponentials
/// accurate to relative error eps_rel on [t_min, T].
MemoryKernel fractional_kernel(double gamma_nu, double nu, double t_min, double T, double eps_rel);

/// Attaches a conjugate-closed quadrature SOE of C with L1 accuracy eps on [0, T].
MemoryKernel kernel_to_soe(MemoryKernel kernel, double eps, double T);

/// Pairs every term (c, z) with (conj c, -conj z) so the sum is real on real t.
SoeRepresentation symmetrize(const SoeRepresentation& soe);

/// m u'' + int_0^t C(t - s) u'(s) ds = force(u) + forcing(t).
struct GleSystem {
  double mass = 1.0;
  std::function<double(double)> force = [](double) { return 0.0; };
  /// U(u) for the energy column; optional.
  std::function<double(double)> potential;
  std::function<double(double)> forcing = [](double) { return 0.0; };
  MemoryKernel kernel;
  double u0 = 0.0;
  double v0 = 0.0;
};

GleSystem harmonic_system(MemoryKernel kernel, double mass, double stiffness, double u0, double v0);

struct TrajectoryPoint {
  double t, u, v, E;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  /// Largest |Im F_mem| relative to the running max of |Re F_mem| (auxiliary route only).
  double max_imag_ratio = 0.0;
};

/// Auxiliary-mode integration, cost O(T/dt * N).
Trajectory integrate_aux(const GleSystem& system, double dt, double T, std::size_t stride = 1);

/// Direct history convolution with the trapezoidal rule, cost O((T/dt)^2).
Trajectory integrate_convolution(const GleSystem& system, double dt, double T, std::size_t stride = 1);

/// Weights of the exact exponential update phi <- e^{-w} phi + A v_n + B v_{n+1}, w = p dt.
struct ExpIntegrator {
  cplx decay, A, B;
};
ExpIntegrator exp_integrator(cplx w, double dt);

}  // namespace soebath
