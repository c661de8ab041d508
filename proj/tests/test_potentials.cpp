#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "tadlab/error.hpp"
#include "tadlab/potential.hpp"
#include "tadlab/rng.hpp"

using namespace tadlab;

namespace {

// Explicit RK4 on dx/dt = -V'(x) until the velocity vanishes.
double descend(const Potential1D& pot, double x) {
  const double h = 1e-2;
  for (int i = 0; i < 200000; ++i) {
    const double k1 = -pot.grad(x);
    const double k2 = -pot.grad(x + 0.5 * h * k1);
    const double k3 = -pot.grad(x + 0.5 * h * k2);
    const double k4 = -pot.grad(x + h * k3);
    x += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    if (std::abs(pot.grad(x)) < 1e-12) break;
  }
  return x;
}

// Sign changes of V' on a dense grid, located to the grid spacing.
std::vector<double> brute_force_roots(const Potential1D& pot, int n) {
  std::vector<double> roots;
  const Interval d = pot.domain();
  const double h = d.width() / n;
  double prev = pot.grad(d.lo);
  for (int i = 1; i <= n; ++i) {
    const double x = d.lo + i * h;
    const double g = pot.grad(x);
    if ((g > 0.0) != (prev > 0.0)) roots.push_back(x - 0.5 * h);
    prev = g;
  }
  return roots;
}

}  // namespace

TEST_CASE("canonical well critical points") {
  const auto cps = find_critical_points(quartic_well());
  REQUIRE(cps.size() == 3);
  CHECK(std::abs(cps[0].x) < 1e-10);
  CHECK(std::abs(cps[1].x - 1.0) < 1e-10);
  CHECK(std::abs(cps[2].x - 2.0) < 1e-10);
  CHECK(cps[0].kind == CriticalKind::maximum);
  CHECK(cps[1].kind == CriticalKind::minimum);
  CHECK(cps[2].kind == CriticalKind::maximum);
  const Potential1D pot = quartic_well();
  for (const auto& c : cps) {
    CHECK(std::abs(pot.grad(c.x)) < kCriticalGradTol);
    CHECK((c.kind == CriticalKind::minimum) == (pot.hess(c.x) > 0.0));
  }
  CHECK(cps[1].Vpp == doctest::Approx(4.0));
  CHECK(cps[0].Vpp == doctest::Approx(-8.0));
}

TEST_CASE("quadratic has a single minimum and no basin") {
  const Potential1D pot = polynomial({0.0, 0.0, 1.0}, {-1.0, 1.0});
  const auto cps = find_critical_points(pot);
  REQUIRE(cps.size() == 1);
  CHECK(std::abs(cps[0].x) < 1e-10);
  CHECK(cps[0].kind == CriticalKind::minimum);
  CHECK_THROWS_AS(build_topology(pot, cps), TopologyError);
}

TEST_CASE("tilted well critical points match a dense grid scan") {
  const Potential1D pot = tilted_quartic(0.1);
  const auto cps = find_critical_points(pot);
  REQUIRE(cps.size() == 3);
  const auto roots = brute_force_roots(pot, 1'000'000);
  REQUIRE(roots.size() == 3);
  const double h = pot.domain().width() / 1'000'000;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(cps[i].x - roots[i]) <= 0.5 * h + 1e-12);
    CHECK(std::abs(cps[i].x - roots[i]) < 1e-6);
    CHECK(std::abs(cps[i].x - i) > 1e-4);  // shifted by the tilt
    CHECK(std::abs(cps[i].x - i) < 0.1);
  }
}

TEST_CASE("degenerate critical points are rejected") {
  // V = x^3: V'(0) = 0 and V''(0) = 0 without a sign change of V'.
  CHECK_THROWS_AS(find_critical_points(polynomial({0.0, 0.0, 0.0, 1.0}, {-1.0, 1.0})), NonMorseError);
  // V = x^4 - flat bottom, V' changes sign but V'' vanishes.
  CHECK_THROWS_AS(find_critical_points(polynomial({0.0, 0.0, 0.0, 0.0, 1.0}, {-1.0, 1.0})), NonMorseError);
  try {
    (void)find_critical_points(polynomial({0.0, 0.0, 0.0, 1.0}, {-1.0, 1.0}));
  } catch (const NonMorseError& e) {
    CHECK(std::abs(e.x) < 1e-3);
  }
  CHECK_THROWS_AS(find_critical_points(quartic_well(), 1), ConfigError);
}

TEST_CASE("canonical topology") {
  const Potential1D pot = quartic_well();
  const BasinTopology top = analyze(pot);
  REQUIRE(top.size() == 1);
  const Basin& b = top.basin(0);
  CHECK(b.label == 0);
  CHECK(std::abs(b.x0 - 1.0) < 1e-10);
  CHECK(b.barrier(Side::left) == doctest::Approx(pot.eval(0.0) - pot.eval(1.0)));
  CHECK(b.barrier(Side::left) == doctest::Approx(1.0));
  CHECK(b.barrier(Side::right) == doctest::Approx(1.0));
  CHECK(b.min_barrier() == doctest::Approx(1.0));
  CHECK_FALSE(top.neighbor(0, Side::left).has_value());
  CHECK_FALSE(top.neighbor(0, Side::right).has_value());
}

TEST_CASE("triple well topology and labels") {
  const Potential1D pot = periodic_wells(2, 1.0);
  const BasinTopology top = analyze(pot);
  REQUIRE(top.size() == 2);
  CHECK(top.basin(0).label == 0);
  CHECK(top.basin(1).label == 1);
  CHECK(std::abs(top.basin(0).x0 - 1.0) < 1e-9);
  CHECK(std::abs(top.basin(1).x0 - 3.0) < 1e-9);
  CHECK(top.basin(0).bounds.hi == top.basin(1).bounds.lo);
  CHECK(top.neighbor(0, Side::right) == 1);
  CHECK(top.neighbor(1, Side::left) == 0);
  CHECK(assign_basin(top, 3.7) == 1);
  CHECK(assign_basin(top, 0.3) == 0);
  CHECK_THROWS_AS(top.basin(2), TopologyError);
}

TEST_CASE("tilted topology has unequal positive barriers") {
  const Potential1D pot = tilted_quartic(0.1);
  const auto cps = find_critical_points(pot);
  const BasinTopology top = build_topology(pot, cps);
  const Basin& b = top.basin(0);
  CHECK(b.barrier(Side::left) > 0.0);
  CHECK(b.barrier(Side::right) > 0.0);
  CHECK(b.barrier(Side::left) != doctest::Approx(b.barrier(Side::right)));
  CHECK(b.barrier(Side::left) == doctest::Approx(pot.eval(cps[0].x) - pot.eval(cps[1].x)));
  CHECK(b.barrier(Side::right) == doctest::Approx(pot.eval(cps[2].x) - pot.eval(cps[1].x)));
}

TEST_CASE("topology rejects basins without saddles on both sides") {
  // -x^2(x-2)^2 on a domain cut before the right maximum.
  const Potential1D pot = polynomial({0.0, 0.0, -4.0, 4.0, -1.0}, {-0.5, 1.5});
  CHECK_THROWS_AS(analyze(pot), TopologyError);
}

TEST_CASE("assign_basin examples") {
  const Potential1D pot = quartic_well();
  const BasinTopology top = analyze(pot);
  CHECK(assign_basin(top, 0.5) == 0);
  CHECK(assign_basin(top, 1.999999) == 0);
  CHECK(std::abs(descend(pot, 1.999999) - 1.0) < 1e-6);
  CHECK_THROWS_AS(assign_basin(top, 2.0), AmbiguousPointError);
  CHECK_THROWS_AS(assign_basin(top, 1e-13), AmbiguousPointError);
  CHECK_THROWS_AS(assign_basin(top, 2.2), TopologyError);
}

TEST_CASE("assign_basin agrees with gradient descent on random points") {
  const Potential1D pot = periodic_wells(3, 1.0);
  const BasinTopology top = analyze(pot);
  Rng rng(7, 0);
  const Interval s = top.span();
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = s.lo + s.width() * rng.uniform();
    bool near_max = false;
    for (const auto& b : top.basins())
      near_max = near_max || std::abs(x - b.bounds.lo) < 1e-6 || std::abs(x - b.bounds.hi) < 1e-6;
    if (near_max) continue;
    const double lim = descend(pot, x);
    const int label = assign_basin(top, x);
    CHECK(std::abs(lim - top.basin(label).x0) < 1e-6);
    ++checked;
  }
  CHECK(checked > 990);
}

TEST_CASE("critical points are stable under scan refinement") {
  for (const Potential1D& pot : {quartic_well(), tilted_quartic(0.1), periodic_wells(3, 1.0),
                                 polynomial({0.3, 0.0, -4.0, 4.0, -1.0, 0.01}, {-0.5, 2.5})}) {
    const auto a = find_critical_points(pot, 20000);
    const auto b = find_critical_points(pot, 40000);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i].x - b[i].x) < 1e-9);
      CHECK(a[i].kind == b[i].kind);
    }
  }
}

TEST_CASE("potential evaluation matches closed forms") {
  const Potential1D w = quartic_well();
  for (double x : {-0.3, 0.0, 0.7, 1.0, 1.6, 2.4}) {
    CHECK(w.eval(x) == doctest::Approx(-x * x * (x - 2) * (x - 2)));
    CHECK(w.grad(x) == doctest::Approx(-2 * x * (x - 2) * (2 * x - 2)).scale(1.0));
  }
  const Potential1D p = periodic_wells(2, 1.0);
  for (double x : {0.0, 0.5, 1.0, 3.3})
    CHECK(p.eval(x) == doctest::Approx(0.5 * std::cos(std::numbers::pi * x)).scale(1.0));
  CHECK_THROWS_AS(periodic_wells(0, 1.0), ConfigError);
  CHECK_THROWS_AS(periodic_wells(2, -1.0), ConfigError);
  CHECK_THROWS_AS(polynomial({1.0}, {1.0, 1.0}), ConfigError);
}
