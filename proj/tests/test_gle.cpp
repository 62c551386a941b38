#include "doctest.h"

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "soebath/gle.hpp"

using namespace soebath;

namespace {

const cplx I(0.0, 1.0);

// C(t) = e^{-t} cos t held exactly as two conjugate exponentials
MemoryKernel damped_cosine() {
  MemoryKernel k;
  k.name = "damped_cosine";
  k.C = [](double t) { return std::exp(-t) * std::cos(t); };
  SoeRepresentation s({{0.5, cplx(1.0, -1.0)}, {0.5, cplx(-1.0, -1.0)}}, 100.0, Provenance::analytic);
  s.set_real_kernel(true);
  k.soe = s;
  return k;
}

double max_gap(const Trajectory& a, const Trajectory& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) e = std::max(e, std::abs(a.points[i].u - b.points[i].u));
  return e;
}

}  // namespace

TEST_SUITE("gle") {
  TEST_CASE("chain kernel values") {
    const auto k = chain_kernel(1.0, 1.0);
    CHECK(std::abs(k.C(0.0) - 1.0) < 1e-10);
    CHECK(std::abs(k.C(1.0) - testref::bessel_j(1, 2.0)) < 1e-10);
    CHECK(std::abs(k.C(1.0) - 0.5767248) < 1e-7);
    CHECK(k.S(2.0) == 0.0);
    CHECK(k.S(0.0) == doctest::Approx(2.0));
    // general mass and coupling: C(t) = m wD J1(wD t) / (2 t)
    const double m = 2.0, K = 1.5, wd = 2.0 * K / std::sqrt(m);
    const auto g = chain_kernel(m, K);
    for (double t : {0.2, 3.0, 11.0}) CHECK(std::abs(g.C(t) - m * wd * testref::bessel_j(1, wd * t) / (2.0 * t)) < 1e-10);
    CHECK_THROWS_AS(chain_kernel(0.0, 1.0), Error);
  }

  TEST_CASE("chain kernel SOE is real and accurate") {
    const auto k = kernel_to_soe(chain_kernel(1.0, 1.0), 1e-6, 50.0);
    REQUIRE(k.soe.has_value());
    REQUIRE(k.fit_error.has_value());
    CHECK(*k.fit_error <= 1e-6);
    CHECK(k.soe->real_kernel());
    for (double t : {0.0, 0.7, 13.0, 49.0}) {
      const cplx v = eval(*k.soe, t);
      CHECK(std::abs(v.imag()) <= 1e-12 * (1.0 + std::abs(v.real())));
      CHECK(std::abs(v.real() - k.C(t)) < 1e-5);
    }
    for (const auto& t : k.soe->terms()) CHECK(t.z.imag() < 0.0);
  }

  TEST_CASE("symmetrize pairs every pole with its mirror") {
    const SoeRepresentation s({{cplx(1.0, 2.0), cplx(3.0, -0.5)}}, 10.0);
    const auto r = symmetrize(s);
    REQUIRE(r.size() == 2);
    for (double t : {0.0, 1.1, 4.0}) {
      CHECK(std::abs(eval(r, t).imag()) < 1e-15);
      CHECK(std::abs(eval(r, t).real() - eval(s, t).real()) < 1e-14);
    }
  }

  TEST_CASE("fractional kernel") {
    const double nu = 0.5, gnu = std::tgamma(0.5);
    const auto k = fractional_kernel(gnu, nu, 1e-3, 1e3, 1e-6);
    REQUIRE(k.soe.has_value());
    CHECK(k.soe->size() <= 200);
    CHECK(*k.fit_error <= 1e-6);
    // gamma_nu = Gamma(1 - nu) makes C(t) = t^{-nu}
    for (double t = 1e-3; t <= 1e3; t *= 1.37) {
      const double v = eval(*k.soe, t).real();
      CHECK(std::abs(v * std::sqrt(t) - 1.0) <= 1e-6);
    }
    for (const auto& t : k.soe->terms()) {
      CHECK(t.z.real() == 0.0);
      CHECK(t.c.real() > 0.0);
    }
    // S(w) = 2 gamma_nu sin(pi nu / 2) |w|^{nu - 1} is homogeneous of degree nu - 1
    CHECK(k.S(4.0) / k.S(1.0) == doctest::Approx(0.5));
    CHECK(k.S(1.0) == doctest::Approx(2.0 * gnu * std::sin(testref::pi / 4)));
    // kernel homogeneity C(lambda t) = lambda^{-nu} C(t) carries over to the fit within eps
    for (double t : {0.01, 0.3, 7.0}) {
      const double a = eval(*k.soe, 10.0 * t).real(), b = eval(*k.soe, t).real();
      CHECK(std::abs(a / b - std::pow(10.0, -nu)) <= 3e-6 * std::pow(10.0, -nu));
    }
    CHECK_THROWS_AS(fractional_kernel(1.0, 1.2, 1e-3, 1.0, 1e-6), Error);
    CHECK_THROWS_AS(kernel_to_soe(k, 1e-6, 10.0), Error);
  }

  TEST_CASE("exponential integrator weights are exact for linear input") {
    const double dt = 0.3;
    for (cplx p : {cplx(1e-6, 0.0), cplx(0.2, 0.1), cplx(0.01, 0.3), cplx(2.0, -5.0), cplx(0.0, 7.0)}) {
      const auto ex = exp_integrator(p * dt, dt);
      // int_0^dt e^{-p(dt-s)} (v0 (1 - s/dt) + v1 s/dt) ds for (v0, v1) = (1, 0) and (0, 1)
      const cplx a = testref::integrate([&](double s) { return std::exp(-p * (dt - s)) * (1.0 - s / dt); }, 0.0, dt, 4);
      const cplx b = testref::integrate([&](double s) { return std::exp(-p * (dt - s)) * (s / dt); }, 0.0, dt, 4);
      CHECK(std::abs(ex.A - a) < 1e-14);
      CHECK(std::abs(ex.B - b) < 1e-14);
      CHECK(std::abs(ex.decay - std::exp(-p * dt)) < 1e-15);
    }
    // the series and closed branches meet at |w| = 0.1
    const auto lo = exp_integrator(cplx(0.0999999999, 0.0), 1.0), hi = exp_integrator(cplx(0.1000000001, 0.0), 1.0);
    CHECK(std::abs(lo.A - hi.A) < 1e-9);
    CHECK(std::abs(lo.B - hi.B) < 1e-9);
  }

  TEST_CASE("zero kernel gives the free oscillator on both routes") {
    MemoryKernel z;
    z.name = "zero";
    z.C = [](double) { return 0.0; };
    z.soe = SoeRepresentation({{0.0, cplx(0.0, -1.0)}}, 10.0);
    const auto sys = harmonic_system(z, 1.0, 1.0, 1.0, 0.0);
    const auto a = integrate_aux(sys, 1e-3, 10.0);
    const auto c = integrate_convolution(sys, 1e-3, 10.0);
    CHECK(max_gap(a, c) == 0.0);
    CHECK(std::abs(a.points.back().u - std::cos(10.0)) < 1e-5);
    CHECK(std::abs(a.points.back().E - 0.5) < 1e-6);
  }

  TEST_CASE("auxiliary and convolution routes agree at second order") {
    const auto sys = harmonic_system(damped_cosine(), 1.0, 1.0, 1.0, 0.0);
    std::vector<double> gaps;
    for (double dt : {0.04, 0.02, 0.01, 0.005}) {
      gaps.push_back(max_gap(integrate_aux(sys, dt, 10.0), integrate_convolution(sys, dt, 10.0)));
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) {
      const double ratio = gaps[i - 1] / gaps[i];
      CHECK(ratio > 3.0);
      CHECK(ratio < 5.0);
    }
    MESSAGE("aux vs conv gaps: " << gaps[0] << " " << gaps[1] << " " << gaps[2] << " " << gaps[3]);
  }

  TEST_CASE("chain GLE dissipates energy and keeps the memory force real") {
    const auto k = kernel_to_soe(chain_kernel(1.0, 1.0), 1e-6, 20.0);
    const auto sys = harmonic_system(k, 1.0, 1.0, 1.0, 0.0);
    const double dt = 1e-2;
    const auto a = integrate_aux(sys, dt, 20.0);
    CHECK(a.max_imag_ratio <= 1e-10);
    // energy may flow back from the bath locally; a positive-definite kernel bounds it by E(0)
    const double E0 = a.points.front().E;
    double worst_rate = 0.0;
    for (std::size_t i = 1; i < a.points.size(); ++i) {
      CHECK(a.points[i].E <= E0 + 10.0 * dt * dt * a.points[i].t);
      worst_rate = std::max(worst_rate, (a.points[i].E - a.points[i - 1].E) / dt);
    }
    CHECK(a.points.back().E < 0.01 * E0);
    MESSAGE("largest local energy growth rate: " << worst_rate);
    const auto c = integrate_convolution(sys, dt, 20.0);
    CHECK(max_gap(a, c) < 1e-4);
  }

  TEST_CASE("auxiliary cost is linear in the horizon") {
    const auto k = kernel_to_soe(chain_kernel(1.0, 1.0), 1e-6, 50.0);
    const auto sys = harmonic_system(k, 1.0, 1.0, 1.0, 0.0);
    auto seconds = [&](double T) {
      double best = inf;
      for (int r = 0; r < 3; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        integrate_aux(sys, 1e-3, T, 1000);
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
      return best;
    };
    const double r = seconds(20.0) / seconds(5.0);
    MESSAGE("aux time ratio for 4x horizon: " << r);
    CHECK(r > 2.0);
    CHECK(r < 8.0);
  }

  TEST_CASE("invalid integration arguments") {
    const auto sys = harmonic_system(damped_cosine(), 1.0, 1.0, 1.0, 0.0);
    CHECK_THROWS_AS(integrate_aux(sys, 0.0, 1.0), Error);
    CHECK_THROWS_AS(integrate_aux(sys, 0.1, 1.0, 0), Error);
    MemoryKernel none;
    none.C = [](double) { return 1.0; };
    CHECK_THROWS_AS(integrate_aux(harmonic_system(none, 1.0, 1.0, 1.0, 0.0), 0.1, 1.0), Error);
  }
}
