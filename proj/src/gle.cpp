#include "soebath/gle.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "soebath/contour.hpp"
#include "soebath/oracle.hpp"

namespace soebath {

std::vector<double> MemoryKernel::grid(double dt, std::size_t n) const {
  if (C_grid) return C_grid(dt, n);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = C(static_cast<double>(k) * dt);
  return out;
}

MemoryKernel chain_kernel(double m, double K) {
  require(m > 0.0 && K > 0.0, "chain_kernel: m and K must be > 0");
  const double wd = 2.0 * K / std::sqrt(m);
  SpectralModel model;
  model.base = make_preset(DensityFamily::semicircle, {wd, m});
  model.statistics = Statistics::classical;

  OracleOptions oo;
  oo.use_closed_form = false;  // panel quadrature, no special functions
  auto oracle = std::make_shared<BcfOracle>(model, oo);

  MemoryKernel k;
  k.name = "chain";
  k.spectrum = model;
  k.S = [wd, m](double w) { return std::abs(w) < wd ? m * std::sqrt(wd * wd - w * w) : 0.0; };
  k.C = [oracle](double t) { return oracle->evaluate(std::abs(t)).value.real() / (2.0 * pi); };
  k.C_grid = [oracle](double dt, std::size_t n) {
    const auto v = oracle->grid(dt, n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = v[i].real() / (2.0 * pi);
    return out;
  };
  return k;
}

namespace {

// SOE of t^{-nu} from the trapezoidal rule on (1/Gamma(nu)) int e^{nu x} e^{-e^x t} dx.
std::vector<SoeTerm> power_law_terms(double nu, double h, double x_lo, double x_hi, double scale) {
  std::vector<SoeTerm> terms;
  const double g = std::tgamma(nu);
  const long k_lo = static_cast<long>(std::floor(x_lo / h));
  const long k_hi = static_cast<long>(std::ceil(x_hi / h));
  for (long k = k_lo; k <= k_hi; ++k) {
    const double x = static_cast<double>(k) * h;
    terms.push_back({cplx(scale * h * std::exp(nu * x) / g, 0.0), cplx(0.0, -std::exp(x))});
  }
  return terms;
}

double max_relative_error(const std::vector<SoeTerm>& terms, double nu, double t_min, double T, double scale) {
  const SoeRepresentation soe(terms, T, Provenance::analytic);
  double worst = 0.0;
  const int probes = 2000;
  for (int i = 0; i <= probes; ++i) {
    const double t = t_min * std::pow(T / t_min, static_cast<double>(i) / probes);
    const double exact = scale * std::pow(t, -nu);
    worst = std::max(worst, std::abs(eval(soe, t).real() - exact) / exact);
  }
  return worst;
}

}  // namespace

MemoryKernel fractional_kernel(double gamma_nu, double nu, double t_min, double T, double eps_rel) {
  require(nu > 0.0 && nu < 1.0, "fractional_kernel: nu must lie in (0, 1)");
  require(gamma_nu > 0.0, "fractional_kernel: gamma_nu must be > 0");
  require(t_min > 0.0 && t_min < T, "fractional_kernel: need 0 < t_min < T");
  require(eps_rel > 0.0 && eps_rel < 1.0, "fractional_kernel: eps_rel must lie in (0, 1)");
  constexpr std::size_t kNodeCap = 1000;

  const double scale = gamma_nu / std::tgamma(1.0 - nu);
  const double le = std::log(1.0 / eps_rel);
  // Discretisation error ~ exp(-pi^2 / h); truncation from the decay of the integrand at both ends.
  double h = pi * pi / (le + 3.0);
  double x_lo = std::log(nu * eps_rel * std::tgamma(nu)) / nu - std::log(T);
  double x_hi = std::log((le + 3.0) / t_min);
  std::vector<SoeTerm> terms;
  double err = inf;
  for (int round = 0; round < 40; ++round) {
    terms = power_law_terms(nu, h, x_lo, x_hi, scale);
    if (terms.size() > kNodeCap) break;
    err = max_relative_error(terms, nu, t_min, T, scale);
    if (err <= eps_rel) break;
    h *= 0.85;
    x_lo -= 1.0;
    x_hi += 0.5;
  }
  if (!(err <= eps_rel)) {
    throw Error("fractional_kernel: relative error target not met within " + std::to_string(kNodeCap) + " nodes");
  }

  MemoryKernel k;
  k.name = "fractional";
  k.t_min = t_min;
  k.S = [gamma_nu, nu](double w) { return 2.0 * gamma_nu * std::sin(pi * nu / 2.0) * std::pow(std::abs(w), nu - 1.0); };
  k.C = [scale, nu](double t) { return scale * std::pow(t, -nu); };
  SoeRepresentation soe(terms, T, Provenance::analytic);
  soe.set_real_kernel(true);
  soe.set_achieved_error(Norm::Linf, err);
  k.soe = soe;
  k.fit_error = err;
  // Below t_min the kernel is singular; the convolution route uses the SOE there.
  k.C_grid = [soe, scale, nu, t_min](double dt, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      out[i] = t < t_min ? eval(soe, t).real() : scale * std::pow(t, -nu);
    }
    return out;
  };
  return k;
}

SoeRepresentation symmetrize(const SoeRepresentation& soe) {
  std::vector<SoeTerm> half, mirror;
  for (const auto& t : soe.terms()) {
    half.push_back({0.5 * t.c, t.z});
    mirror.push_back({0.5 * std::conj(t.c), -std::conj(t.z)});
  }
  SoeRepresentation a(std::move(half), soe.horizon(), soe.provenance());
  SoeRepresentation b(std::move(mirror), soe.horizon(), soe.provenance());
  SoeRepresentation out = merge(a, b, true);
  if (soe.achieved_error()) out.set_achieved_error(soe.achieved_error()->norm, soe.achieved_error()->value);
  out.set_real_kernel(true);
  return out;
}

MemoryKernel kernel_to_soe(MemoryKernel kernel, double eps, double T) {
  require(eps > 0.0 && T > 0.0, "kernel_to_soe: need eps > 0 and T > 0");
  if (!kernel.spectrum) throw Error("kernel_to_soe: kernel '" + kernel.name + "' has no integrable spectrum");
  // C = Delta / (2 pi) for the spectrum taken as a classical density.
  const auto built = build_bcf_soe(*kernel.spectrum, 2.0 * pi * eps, T);
  std::vector<SoeTerm> terms;
  for (const auto& t : built.soe.terms()) terms.push_back({t.c / (2.0 * pi), t.z});
  SoeRepresentation soe = symmetrize(SoeRepresentation(std::move(terms), T, Provenance::quadrature));

  const double dt = 0.01;
  const std::size_t n = grid_count(T, dt);
  const auto c = kernel.grid(dt, n);
  std::vector<cplx> ref(c.begin(), c.end());
  const double err = l1_error(soe, ref, dt);
  soe.set_achieved_error(Norm::L1, err);
  kernel.soe = soe;
  kernel.fit_error = err;
  return kernel;
}

GleSystem harmonic_system(MemoryKernel kernel, double mass, double stiffness, double u0, double v0) {
  GleSystem s;
  s.mass = mass;
  s.force = [stiffness](double u) { return -stiffness * u; };
  s.potential = [stiffness](double u) { return 0.5 * stiffness * u * u; };
  s.kernel = std::move(kernel);
  s.u0 = u0;
  s.v0 = v0;
  return s;
}

ExpIntegrator exp_integrator(cplx w, double dt) {
  // phi1 = (1 - e^{-w}) / w, g2 = (1 - e^{-w}(1 + w)) / w^2
  cplx phi1, g2;
  if (std::abs(w) < 0.1) {
    phi1 = 0.0;
    g2 = 0.0;
    cplx term = 1.0;  // (-w)^k
    double fact = 1.0;  // (k+1)!
    for (int k = 0; k < 18; ++k) {
      fact *= (k + 1);
      phi1 += term / fact;
      g2 += term * static_cast<double>(k + 1) / (fact * (k + 2));
      term *= -w;
    }
  } else {
    const cplx e = std::exp(-w);
    phi1 = (1.0 - e) / w;
    g2 = (1.0 - e * (1.0 + w)) / (w * w);
  }
  const cplx B = dt * (phi1 - g2);
  return ExpIntegrator{std::exp(-w), dt * phi1 - B, B};
}

namespace {

void check_state(double u, double v, std::size_t step) {
  if (!std::isfinite(u) || !std::isfinite(v)) throw Error("GLE state became non-finite at step " + std::to_string(step));
}

double energy(const GleSystem& s, double u, double v) {
  const double kinetic = 0.5 * s.mass * v * v;
  return s.potential ? kinetic + s.potential(u) : std::nan("");
}

std::size_t step_count(double dt, double T) {
  require(dt > 0.0 && T > 0.0, "integration needs dt > 0 and T > 0");
  return static_cast<std::size_t>(std::llround(T / dt));
}

}  // namespace

Trajectory integrate_aux(const GleSystem& system, double dt, double T, std::size_t stride) {
  const std::size_t steps = step_count(dt, T);
  require(system.kernel.soe.has_value(), "integrate_aux: kernel has no SOE");
  require(stride >= 1, "stride must be >= 1");
  const auto& terms = system.kernel.soe->terms();
  const std::size_t N = terms.size();

  // GLE decay rate p = i z for the term e^{-i z t} = e^{-p t}.
  std::vector<ExpIntegrator> ex(N);
  std::vector<cplx> weight(N);
  double b = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    ex[j] = exp_integrator(cplx(0.0, 1.0) * terms[j].z * dt, dt);
    weight[j] = terms[j].c;
    b += (weight[j] * ex[j].B).real();
  }
  std::vector<cplx> phi(N, 0.0), partial(N);

  const double m = system.mass;
  double u = system.u0, v = system.v0;
  double f = system.force(u) + system.forcing(0.0);
  double fmem = 0.0;
  double mem_scale = 0.0;
  Trajectory out;
  out.points.push_back({0.0, u, v, energy(system, u, v)});
  for (std::size_t n = 0; n < steps; ++n) {
    const double t1 = static_cast<double>(n + 1) * dt;
    const double a = (f + fmem) / m;
    const double u1 = u + dt * v + 0.5 * dt * dt * a;
    const double f1 = system.force(u1) + system.forcing(t1);
    // F_{n+1} = F* - b v_{n+1}
    cplx fstar = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      partial[j] = ex[j].decay * phi[j] + ex[j].A * v;
      fstar -= weight[j] * partial[j];
    }
    const double v1 = (v + 0.5 * dt / m * (f + fmem + f1 + fstar.real())) / (1.0 + 0.5 * dt * b / m);
    cplx mem = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      phi[j] = partial[j] + ex[j].B * v1;
      mem += weight[j] * phi[j];
    }
    mem_scale = std::max(mem_scale, std::abs(mem.real()));
    out.max_imag_ratio = std::max(out.max_imag_ratio, std::abs(mem.imag()) / (mem_scale + 1e-300));
    fmem = -mem.real();
    u = u1;
    v = v1;
    f = f1;
    check_state(u, v, n + 1);
    if ((n + 1) % stride == 0 || n + 1 == steps) out.points.push_back({t1, u, v, energy(system, u, v)});
  }
  return out;
}

Trajectory integrate_convolution(const GleSystem& system, double dt, double T, std::size_t stride) {
  const std::size_t steps = step_count(dt, T);
  require(system.kernel.C || system.kernel.C_grid, "integrate_convolution: kernel has no C(t)");
  require(stride >= 1, "stride must be >= 1");
  const auto C = system.kernel.grid(dt, steps + 1);
  std::vector<double> vhist;
  vhist.reserve(steps + 1);

  const double m = system.mass;
  double u = system.u0, v = system.v0;
  vhist.push_back(v);
  double f = system.force(u) + system.forcing(0.0);
  double fmem = 0.0;
  const double b = 0.5 * dt * C[0];
  Trajectory out;
  out.points.push_back({0.0, u, v, energy(system, u, v)});
  for (std::size_t n = 0; n < steps; ++n) {
    const double t1 = static_cast<double>(n + 1) * dt;
    const double a = (f + fmem) / m;
    const double u1 = u + dt * v + 0.5 * dt * dt * a;
    const double f1 = system.force(u1) + system.forcing(t1);
    // trapezoid over s_k = k dt, k = 0..n+1, without the v_{n+1} end term
    double hist = 0.5 * C[n + 1] * vhist[0];
    for (std::size_t k = 1; k <= n; ++k) hist += C[n + 1 - k] * vhist[k];
    const double fstar = -dt * hist;
    const double v1 = (v + 0.5 * dt / m * (f + fmem + f1 + fstar)) / (1.0 + 0.5 * dt * b / m);
    fmem = fstar - b * v1;
    u = u1;
    v = v1;
    f = f1;
    vhist.push_back(v);
    check_state(u, v, n + 1);
    if ((n + 1) % stride == 0 || n + 1 == steps) out.points.push_back({t1, u, v, energy(system, u, v)});
  }
  return out;
}

}  // namespace soebath
