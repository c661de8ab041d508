#include <doctest.h>

#include <cmath>
#include <vector>

#include "tadlab/dynamics.hpp"
#include "tadlab/error.hpp"
#include "tadlab/qsd.hpp"
#include "tadlab/studies.hpp"

using namespace tadlab;

namespace {

const Potential1D kFlat = polynomial({0.0}, {-1e6, 1e6});

Basin canonical_basin() { return analyze(quartic_well()).basin(0); }

// Mass of the grid density in each of k equal bins over [a, b].
std::vector<double> binned_density(const EigenPair& eig, int k) {
  const auto rho = qsd_density(eig);
  std::vector<double> mass(k, 0.0);
  const double width = (eig.b - eig.a) / k;
  for (std::size_t j = 0; j + 1 < eig.x.size(); ++j) {
    const double xm = 0.5 * (eig.x[j] + eig.x[j + 1]);
    const int bin = std::min(k - 1, static_cast<int>((xm - eig.a) / width));
    mass[bin] += 0.5 * eig.h * (rho[j] + rho[j + 1]);
  }
  return mass;
}

}  // namespace

TEST_CASE("zero-noise Euler steps") {
  SdeConfig cfg;
  cfg.beta = 1.0;
  cfg.dt = 0.1;
  CHECK(em_step_with_noise(0.37, kFlat, cfg, 0.0) == 0.37);
  const Potential1D harmonic = polynomial({0.0, 0.0, 0.5}, {-5.0, 5.0});
  CHECK(em_step_with_noise(1.0, harmonic, cfg, 0.0) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("Euler increments have variance 2 dt / beta") {
  SdeConfig cfg;
  cfg.beta = 2.0;
  cfg.dt = 0.01;
  Rng rng(1, 0);
  double x = 0.0, s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double xn = em_step(x, kFlat, cfg, rng);
    s += xn - x;
    s2 += (xn - x) * (xn - x);
    x = xn;
  }
  const double var = s2 / n - (s / n) * (s / n);
  CHECK(std::abs(var / 0.01 - 1.0) < 0.03);
}

TEST_CASE("Euler step leaving the simulation box throws") {
  SdeConfig cfg;
  cfg.beta = 1.0;
  cfg.dt = 0.1;
  const Potential1D pot = quartic_well();
  CHECK_THROWS_AS(em_step_with_noise(2.4, pot, cfg, 10.0), DomainEscapeError);
  cfg.dt = -1.0;
  CHECK_THROWS_AS(em_step_with_noise(1.0, pot, cfg, 0.0), ConfigError);
}

TEST_CASE("trajectories are reproducible from (seed, stream)") {
  const Potential1D pot = quartic_well();
  const Basin b = canonical_basin();
  SdeConfig cfg;
  cfg.beta = 3.0;
  cfg.seed = 99;
  cfg.stream = 4;
  Rng r1 = cfg.rng(), r2 = cfg.rng();
  const ExitEvent e1 = evolve_until_exit(1.0, b, pot, cfg, r1, 100'000'000);
  const ExitEvent e2 = evolve_until_exit(1.0, b, pot, cfg, r2, 100'000'000);
  CHECK(e1.steps == e2.steps);
  CHECK(e1.position == e2.position);
  CHECK(e1.time == doctest::Approx(static_cast<double>(e1.steps) * cfg.dt));
  CHECK(e1.side == (e1.position <= b.bounds.lo ? Side::left : Side::right));
  CHECK_FALSE(b.bounds.contains_open(e1.position));
}

TEST_CASE("exits from the minimum at beta 4: mean time and side") {
  const Potential1D pot = quartic_well();
  const Basin b = canonical_basin();
  const EigenPair eig = solve_principal_eigenpair(pot, b, 4.0);
  const ForceField f = ForceField::from(pot);
  const double dt = 2.5e-4;
  const std::size_t n = 10000;
  const auto ev = run_ensemble(f, n, 3, 0, [&](std::size_t, Rng&) {
    return exit_sim(b.x0, b.bounds, 4.0, dt, 1'000'000'000);
  });
  double mean = 0.0;
  std::size_t left = 0;
  for (const auto& e : ev) {
    mean += e.time;
    left += e.side == Side::left;
  }
  mean /= static_cast<double>(n);
  MESSAGE("mean exit time " << mean << ", 1/lambda " << 1.0 / eig.lambda);
  CHECK(std::abs(mean * eig.lambda - 1.0) < 0.10);
  CHECK(std::abs(static_cast<double>(left) / n - 0.5) < 0.02);
}

TEST_CASE("exit search times out on its step budget") {
  const Potential1D pot = quartic_well();
  SdeConfig cfg;
  cfg.beta = 4.0;
  Rng rng(1, 1);
  CHECK_THROWS_AS(evolve_until_exit(1.0, canonical_basin(), pot, cfg, rng, 1), TimeoutError);
  CHECK_THROWS_AS(evolve_until_exit(2.1, canonical_basin(), pot, cfg, rng, 10), DomainEscapeError);
}

TEST_CASE("reflection mirrors about the crossed end") {
  ForceField push;  // V = -x, constant drift +1
  push.ncoeffs = 1;
  push.dcoeffs[0] = -1.0;
  Walker w;
  w.x = 1.96;
  w.lo = 0.0;
  w.hi = 2.0;
  w.dt = 0.1;
  w.noise = 0.0;
  w.remaining = 1;
  w.reflect = true;
  RngState st = Rng(1, 0).state();
  advance_walker(push, w, st);
  CHECK(w.x == doctest::Approx(1.94).epsilon(1e-14));
  CHECK_FALSE(w.exited);

  ForceField flat = ForceField::from(kFlat);
  Walker still;
  still.x = 0.3;
  still.lo = 0.0;
  still.hi = 1.0;
  still.dt = 0.01;
  still.noise = 0.0;
  still.remaining = 1000;
  still.reflect = true;
  advance_walker(flat, still, st);
  CHECK(still.x == 0.3);
}

TEST_CASE("reflected Brownian motion is uniform") {
  const ForceField flat = ForceField::from(kFlat);
  Rng rng(5, 0);
  Walker w;
  w.x = 0.5;
  w.lo = 0.0;
  w.hi = 1.0;
  w.dt = 0.01;
  w.noise = std::sqrt(2.0 * w.dt);
  w.reflect = true;
  std::vector<double> hist(5, 0.0);
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    w.remaining = 1;
    advance_walker(flat, w, rng.state());
    REQUIRE((w.x >= 0.0 && w.x <= 1.0));
    hist[std::min(4, static_cast<int>(w.x * 5.0))] += 1.0;
  }
  double dev = 0.0;
  for (double h : hist) dev = std::max(dev, std::abs(h / n * 5.0 - 1.0));
  MESSAGE("sup deviation " << dev);
  CHECK(dev < 0.03);

  SdeConfig cfg;
  cfg.beta = 1.0;
  cfg.dt = 0.01;
  Rng r2(5, 1);
  const double x = evolve_with_reflection(0.5, {0.0, 1.0}, kFlat, cfg, r2, 50.0);
  CHECK((x >= 0.0 && x <= 1.0));
  CHECK(evolve_with_reflection(0.5, {0.0, 1.0}, kFlat, cfg, r2, 0.0) == 0.5);
}

TEST_CASE("rejection sampler matches the QSD density") {
  const Potential1D pot = quartic_well();
  const Basin b = canonical_basin();
  const EigenPair eig = solve_principal_eigenpair(pot, b, 6.0);
  const ForceField f = ForceField::from(pot);
  const std::size_t n = 10000;
  const auto rs = run_ensemble(f, n, 8, 0, [&](std::size_t, Rng&) {
    return relax_sim(b.x0, b.bounds, 6.0, 1e-3, 5.0, 1'000'000);
  });
  const int k = 20;
  std::vector<double> emp(k, 0.0);
  for (const auto& r : rs) {
    REQUIRE(b.bounds.contains_open(r.x));
    emp[std::min(k - 1, static_cast<int>((r.x - b.bounds.lo) / b.bounds.width() * k))] += 1.0 / n;
  }
  const auto ref = binned_density(eig, k);
  double tv = 0.0;
  for (int i = 0; i < k; ++i) tv += 0.5 * std::abs(emp[i] - ref[i]);
  MESSAGE("total variation " << tv);
  CHECK(tv < 0.05);

  SdeConfig cfg;
  cfg.beta = 6.0;
  Rng rng(8, 1);
  CHECK(sample_qsd_by_rejection(b, pot, cfg, rng, 0.0) == b.x0);
  CHECK_THROWS_AS(sample_qsd_by_rejection(b, pot, cfg, rng, -1.0), ConfigError);
}

TEST_CASE("rejection sampler reports infeasible relaxation times") {
  const Potential1D pot = quartic_well();
  const Basin b = canonical_basin();
  const EigenPair eig = solve_principal_eigenpair(pot, b, 1.0);
  SdeConfig cfg;
  cfg.beta = 1.0;
  cfg.dt = 0.01;
  Rng rng(9, 0);
  CHECK_THROWS_AS(sample_qsd_by_rejection(b, pot, cfg, rng, 1e4 / eig.lambda), InfeasibleError);
}

TEST_CASE("exact QSD sampler") {
  const Potential1D pot = tilted_quartic(0.1);
  const Basin b = analyze(pot).basin(0);
  const EigenPair eig = solve_principal_eigenpair(pot, b, 6.0);
  const QsdSampler sampler(eig);
  Rng rng(10, 0);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sampler(rng);
    REQUIRE(b.bounds.contains_open(x));
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  // Quadrature mean of the density, trapezoid on the grid.
  const auto rho = qsd_density(eig);
  double q = 0.0;
  for (std::size_t j = 0; j + 1 < eig.x.size(); ++j)
    q += 0.5 * eig.h * (rho[j] * eig.x[j] + rho[j + 1] * eig.x[j + 1]);
  CHECK(std::abs(mean - q) < 3.0 * se);

  const Potential1D sym = quartic_well();
  const EigenPair es = solve_principal_eigenpair(sym, canonical_basin(), 6.0);
  const QsdSampler ss(es);
  double m = 0.0;
  for (int i = 0; i < n; ++i) m += ss(rng);
  CHECK(std::abs(m / n - 1.0) < 0.01);

  EigenPair empty = es;
  std::fill(empty.u.begin(), empty.u.end(), 0.0);
  CHECK_THROWS_AS(QsdSampler{empty}, DegenerateEigenpairError);
}

TEST_CASE("QSD-started exit times are exponential at beta 4") {
  const auto out = exit_law_study(quartic_well(), 0, 4.0, 1e-4, 2000, 21, {});
  MESSAGE("KS " << out.report.statistic << " threshold " << out.report.threshold);
  CHECK(out.report.verdict == Verdict::pass);
}

TEST_CASE("exit time and side are independent on the tilted well") {
  const auto out = independence_study(tilted_quartic(0.1), 0, 4.0, 1e-3, 10000, 22, {});
  MESSAGE("KS " << out.report.statistic << " threshold " << out.report.threshold);
  CHECK(out.report.verdict == Verdict::pass);
}

TEST_CASE("halving dt moves the mean exit time by less than 2 percent") {
  // Coupled paths: the coarse path's normal is (xi1 + xi2) / sqrt 2 of the
  // two fine normals covering the same time interval.
  const Potential1D pot = quartic_well();
  const Basin b = canonical_basin();
  SdeConfig fine;
  fine.beta = 4.0;
  fine.dt = 2.5e-4;
  SdeConfig coarse = fine;
  coarse.dt = 5e-4;
  const int pairs = 2000;
  double sum_f = 0.0, sum_c = 0.0, sum_d = 0.0, sum_d2 = 0.0;
  for (int p = 0; p < pairs; ++p) {
    Rng rng(31, static_cast<std::uint64_t>(p));
    double xf = b.x0, xc = b.x0;
    double tf = -1.0, tc = -1.0;
    std::int64_t k = 0;
    while (tf < 0.0 || tc < 0.0) {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      if (tf < 0.0) {
        xf = em_step_with_noise(xf, pot, fine, z1);
        if (!b.bounds.contains_open(xf)) tf = (2 * k + 1) * fine.dt;
      }
      if (tf < 0.0) {
        xf = em_step_with_noise(xf, pot, fine, z2);
        if (!b.bounds.contains_open(xf)) tf = (2 * k + 2) * fine.dt;
      }
      if (tc < 0.0) {
        xc = em_step_with_noise(xc, pot, coarse, (z1 + z2) / std::sqrt(2.0));
        if (!b.bounds.contains_open(xc)) tc = (k + 1) * coarse.dt;
      }
      ++k;
    }
    sum_f += tf;
    sum_c += tc;
    sum_d += tc - tf;
    sum_d2 += (tc - tf) * (tc - tf);
  }
  const double mf = sum_f / pairs;
  const double rel = (sum_c - sum_f) / sum_f;
  const double se = std::sqrt((sum_d2 / pairs - (sum_d / pairs) * (sum_d / pairs)) / pairs) / mf;
  MESSAGE("relative change " << rel << " +- " << se);
  CHECK(std::abs(rel) < 0.02);
}

TEST_CASE("default step and relaxation rules") {
  CHECK(default_dt(4.0) == 1e-3);
  CHECK(default_dt(8.0) == 1e-3);
  CHECK(default_dt(12.0) == 5e-4);
  CHECK(default_dt(16.0) == 2.5e-4);
  CHECK(steps_for(1.0, 1e-3) == 1000);
  CHECK(steps_for(0.0, 1e-3) == 0);
  const EigenPair eig = solve_principal_eigenpair(quartic_well(), canonical_basin(), 6.0);
  CHECK(default_t_relax(eig) == doctest::Approx(10.0 / (eig.lambda2 - eig.lambda)));
}
