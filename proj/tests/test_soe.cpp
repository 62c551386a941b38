#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "soebath/soe.hpp"

using namespace soebath;

namespace {

SoeRepresentation random_soe(std::size_t n, std::uint64_t seed, double T = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), d(0.01, 2.0);
  std::vector<SoeTerm> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({cplx(u(rng), u(rng)), cplx(3.0 * u(rng), -d(rng))});
  return SoeRepresentation(t, T);
}

// direct sum, no compensation or recurrence
cplx naive(const SoeRepresentation& s, double t) {
  cplx sum = 0.0;
  for (const auto& x : s.terms()) sum += x.c * std::exp(cplx(0, -1) * x.z * t);
  return sum;
}

}  // namespace

TEST_SUITE("soe") {
  TEST_CASE("invariants enforced") {
    CHECK_THROWS_AS(SoeRepresentation({}, 1.0), Error);
    CHECK_THROWS_AS(SoeRepresentation({{1.0, cplx(0, 1)}}, 1.0), Error);
    CHECK_THROWS_AS(SoeRepresentation({{cplx(NAN, 0), cplx(0, -1)}}, 1.0), Error);
    CHECK_NOTHROW(SoeRepresentation({{1.0, 0.0}}, 1.0));
  }

  TEST_CASE("eval examples") {
    CHECK(std::abs(eval(SoeRepresentation({{1.0, 0.0}}, 1.0), 123.4) - 1.0) < 1e-15);
    CHECK(eval(SoeRepresentation({{2.0, cplx(0, -1)}}, 1.0), 1.0).real() ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
    const SoeRepresentation pair({{1.0, cplx(1, -1)}, {1.0, cplx(-1, -1)}}, 10.0);
    const cplx v = eval(pair, testref::pi);
    CHECK(v.real() == doctest::Approx(-2.0 * std::exp(-testref::pi)).epsilon(1e-13));
    CHECK(std::abs(v.imag()) < 1e-15);
  }

  TEST_CASE("eval_grid examples and consistency") {
    const std::vector<double> t{0.0, 1.0, 2.0};
    for (const auto& v : eval_grid(SoeRepresentation({{1.0, 0.0}}, 1.0), t)) CHECK(std::abs(v - 1.0) < 1e-15);
    const std::vector<double> t2{0.0, std::log(2.0)};
    const auto v2 = eval_grid(SoeRepresentation({{1.0, cplx(0, -1)}}, 1.0), t2);
    CHECK(std::abs(v2[0] - 1.0) < 1e-15);
    CHECK(std::abs(v2[1] - 0.5) < 1e-15);

    const auto s = random_soe(40, 7);
    std::vector<double> grid;
    for (int k = 0; k < 3000; ++k) grid.push_back(0.01 * k);
    const auto g = eval_grid(s, grid);
    const auto u = eval_uniform(s, 0.01, grid.size());
    for (std::size_t k = 0; k < grid.size(); k += 37) {
      const cplx ref = naive(s, grid[k]);
      CHECK(std::abs(g[k] - ref) <= 1e-12 * (1.0 + std::abs(ref)));
      CHECK(std::abs(u[k] - ref) <= 1e-12 * (1.0 + std::abs(ref)));
      CHECK(std::abs(eval(s, grid[k]) - ref) <= 1e-12 * (1.0 + std::abs(ref)));
    }
  }

  TEST_CASE("long uniform grids do not drift") {
    // undamped modes over 1e6 steps: recurrence resync keeps the phase exact
    const SoeRepresentation s({{1.0, 3.7}, {0.5, -11.3}}, 1e4);
    const std::size_t n = 1000001;
    const auto u = eval_uniform(s, 0.01, n);
    for (std::size_t k : {std::size_t{0}, std::size_t{123457}, n - 1}) {
      const cplx ref = naive(s, 0.01 * static_cast<double>(k));
      CHECK(std::abs(u[k] - ref) < 1e-10);
    }
  }

  TEST_CASE("affine rescale") {
    const auto s = random_soe(5, 3);
    const auto id = affine_rescale(s, 1.0, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(id.terms()[i].z == s.terms()[i].z);
    const auto r = affine_rescale(SoeRepresentation({{1.0, 0.0}}, 4.0), 2.0, 3.0);
    CHECK(r.terms()[0].z == cplx(3.0, 0.0));
    CHECK(r.horizon() == doctest::Approx(2.0));
    CHECK(std::abs(eval(r, 0.7) - std::exp(cplx(0, -3.0 * 0.7))) < 1e-15);
    const auto back = affine_rescale(affine_rescale(s, 2.5, 1.5), 1.0 / 2.5, -1.5 / 2.5);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(back.terms()[i].z - s.terms()[i].z) < 1e-14);
  }

  TEST_CASE("merge is linear") {
    const auto a = random_soe(7, 11), b = random_soe(9, 12);
    const auto m = merge(a, b);
    CHECK(m.size() == 16);
    for (double t : {0.0, 0.3, 2.0, 9.5}) {
      const cplx ref = naive(a, t) + naive(b, t);
      CHECK(std::abs(eval(m, t) - ref) <= 1e-13 * (1.0 + std::abs(ref)));
    }
    const auto c = merge(a, a, true);
    CHECK(c.size() == a.size());
    for (double t : {0.0, 1.0}) CHECK(std::abs(eval(c, t) - 2.0 * naive(a, t)) < 1e-13);
  }

  TEST_CASE("error metrics") {
    const SoeRepresentation one({{1.0, 0.0}}, 1.0);
    const ScalarReference zero = [](double) { return cplx(0.0); };
    CHECK(l1_error(one, zero, 1.0, 0.5) == doctest::Approx(1.5));
    CHECK(linf_error(one, zero, 3.0, 0.1) == doctest::Approx(1.0));
    const auto s = random_soe(6, 5);
    const ScalarReference self = [&](double t) { return naive(s, t); };
    CHECK(l1_error(s, self, 10.0, 0.01) < 1e-12);
    CHECK(linf_error(s, self, 10.0, 0.01) < 1e-13);
    CHECK(grid_count(1.0, 0.5) == 3);
    CHECK(grid_count(100.0, 0.01) == 10001);
  }

  TEST_CASE("Riemann L1 is stable under halving dt") {
    const SoeRepresentation s({{1.0, cplx(0.5, -0.2)}, {-0.3, cplx(-1.0, -0.05)}}, 50.0);
    const ScalarReference ref = [](double t) { return cplx(std::exp(-0.1 * t), 0.0); };
    const double e1 = l1_error(s, ref, 50.0, 0.02), e2 = l1_error(s, ref, 50.0, 0.01);
    CHECK(std::abs(e1 - e2) < 0.05 * e2);
  }

  TEST_CASE("json round trip") {
    auto s = random_soe(4, 9, 42.0);
    s.set_achieved_error(Norm::L1, 1.25e-3);
    s.set_real_kernel(false);
    const auto j = to_json(s);
    CHECK(j["meta"]["N"] == 4);
    const auto r = soe_from_json(j);
    REQUIRE(r.size() == s.size());
    CHECK(r.horizon() == 42.0);
    REQUIRE(r.achieved_error().has_value());
    CHECK(r.achieved_error()->value == 1.25e-3);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(r.terms()[i].c == s.terms()[i].c);
      CHECK(r.terms()[i].z == s.terms()[i].z);
    }
    const std::string path = "soe_roundtrip_test.json";
    write_json(s, path);
    const auto f = read_json(path);
    CHECK(f.terms()[2].z == s.terms()[2].z);
    std::remove(path.c_str());
    CHECK_THROWS_AS(soe_from_json(nlohmann::json{{"terms", 3}}), Error);
  }

  TEST_CASE("csv writer") {
    const std::string path = "soe_test.csv";
    write_csv(SoeRepresentation({{1.0, 0.0}}, 1.0), 1.0, 0.5, path);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    std::getline(in, line);
    CHECK(line == "t,re,im");
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);
    std::remove(path.c_str());
  }
}
