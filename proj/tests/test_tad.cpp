#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "tadlab/error.hpp"
#include "tadlab/studies.hpp"
#include "tadlab/tad.hpp"
#include "tadlab/verify.hpp"

using namespace tadlab;

namespace {

TadConfig tilted_cfg(Variant v, double dt = 1e-3) {
  TadConfig c;
  c.beta_hi = 10.0 / 3.0;
  c.beta_lo = 10.0;
  c.dt = dt;
  c.seed = 5;
  if (v == Variant::modified) c.e_min = 0.5;
  return c;
}

const TadModel& tilted_model() {
  static const TadModel m(tilted_quartic(0.1), [] {
    TadConfig c = tilted_cfg(Variant::modified);
    c.e_min = analyze(tilted_quartic(0.1)).basin(0).min_barrier();
    return c;
  }());
  return m;
}

struct Mean {
  double mean, se;
};

Mean mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  return {m, std::sqrt(s2 / (n - 1.0) / n)};
}

}  // namespace

TEST_CASE("Arrhenius extrapolation") {
  CHECK(extrapolate_exit_time(1.0, 1.0, 2.0, 6.0) == doctest::Approx(54.598).epsilon(1e-5));
  CHECK(extrapolate_exit_time(3.7, 1.3, 5.0, 5.0) == 3.7);
  for (double t : {0.1, 1.0, 17.0})
    CHECK(extrapolate_exit_time(2.0 * t, 0.8, 2.0, 6.0) == doctest::Approx(2.0 * extrapolate_exit_time(t, 0.8, 2.0, 6.0)));
}

TEST_CASE("original stop rule") {
  CHECK(stop_time_original(100.0, 1.0, 0.01, 1.0, 3.0) == doctest::Approx(12.84).epsilon(1e-3));
  CHECK(std::isinf(stop_time_original(kInf, 1.0, 0.01, 1.0, 3.0)));
  CHECK(stop_time_original(100.0, 1.0, 0.01, 3.0, 3.0) == doctest::Approx(100.0));
  CHECK(stop_time_original(100.0, 1.0, 0.01, 2.99999, 3.0) == doctest::Approx(100.0).epsilon(1e-4));
  double prev = 0.0;
  for (double t : {1.0, 10.0, 100.0, 1e4}) {
    const double s = stop_time_original(t, 1.0, 0.01, 1.0, 3.0);
    CHECK(s > prev);
    prev = s;
  }
  CHECK(stop_time_original(100.0, 1.0, 1e-9, 1.0, 3.0) > stop_time_original(100.0, 1.0, 0.01, 1.0, 3.0));
}

TEST_CASE("modified stop rule and its guarantee") {
  CHECK(stop_time_modified(100.0, 1.0, 2.0, 6.0) == doctest::Approx(1.832).epsilon(1e-3));
  CHECK(stop_time_modified(100.0, 0.0, 2.0, 6.0) == 100.0);
  CHECK(std::isinf(stop_time_modified(kInf, 1.0, 2.0, 6.0)));
  CHECK(stop_time_modified(100.0, 0.5, 2.0, 6.0) < 100.0);
  Rng rng(3, 0);
  for (int i = 0; i < 10000; ++i) {
    const double bh = 1.0 + 5.0 * rng.uniform();
    const double bl = bh * (1.0 + 4.0 * rng.uniform());
    const double e_min = 2.0 * rng.uniform();
    const double barrier = e_min + rng.uniform();
    const double t_min_lo = std::exp(10.0 * rng.uniform());
    const double t_stop = stop_time_modified(t_min_lo, e_min, bh, bl);
    const double t_hi = t_stop * (1.0 + rng.uniform());
    CHECK(extrapolate_exit_time(t_hi, barrier, bh, bl) >= t_min_lo * (1.0 - 1e-12));
  }
}

TEST_CASE("configuration checks") {
  TadConfig c;
  CHECK_NOTHROW(c.validate());
  TadConfig bad = c;
  bad.beta_hi = bad.beta_lo;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.delta = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.nu_min = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  // e_min above the smallest barrier breaks the guarantee.
  TadConfig hi = c;
  hi.e_min = 1.5;
  CHECK_THROWS_AS(TadModel(quartic_well(), hi), ConfigError);
  hi.e_min = 1.0;
  CHECK_NOTHROW(TadModel(quartic_well(), hi));
  CHECK(parse_variant("modified") == Variant::modified);
  CHECK_THROWS_AS(parse_variant("fast"), ConfigError);
}

TEST_CASE("exit step bookkeeping") {
  const TadModel& m = tilted_model();
  for (Variant v : {Variant::idealized, Variant::modified, Variant::original}) {
    CAPTURE(to_string(v));
    for (int i = 0; i < 20; ++i) {
      Rng rng(11, static_cast<std::uint64_t>(i));
      const ExitStepResult r = run_sync(m.field(), exit_step_sim(v, m, 0, m.basin(0).basin.x0, rng), rng);
      CHECK(r.n_attempts >= 1);
      CHECK(r.events.size() == static_cast<std::size_t>(r.n_attempts));
      double best = kInf;
      for (int k = 0; k < 2; ++k)
        if (r.t_lo[k]) best = std::min(best, *r.t_lo[k]);
      CHECK(r.t_min_lo == best);
      CHECK(r.t_sim_final <= r.t_stop + m.cfg().dt);
      CHECK(r.events.back().t_sim <= r.t_sim_final);
      CHECK(r.steps_search == std::llround(r.t_sim_final / m.cfg().dt));
    }
  }
  Rng rng(1, 0);
  CHECK_THROWS_AS(exit_step_original(m, 0, 5.0, rng), DomainEscapeError);
}

TEST_CASE("idealized exit step: exponential law, sides and independence") {
  TadConfig c = tilted_cfg(Variant::idealized, 1e-4);
  const TadModel m(tilted_quartic(0.1), c);
  const std::size_t n = 2000;
  const auto rs = exit_step_ensemble(Variant::idealized, m, 0, n, 17, 0, {}, {});
  std::vector<double> t;
  std::vector<Side> s;
  std::size_t left = 0;
  for (const auto& r : rs) {
    t.push_back(r.t_min_lo);
    s.push_back(r.i_min_lo);
    left += r.i_min_lo == Side::left;
  }
  const auto& st = m.basin(0).stats_lo;
  const TestReport ks = ks_one_sample_exponential(t, st.lambda);
  MESSAGE("KS " << ks.statistic << " / " << ks.threshold << ", left " << left << " p_left " << st.p_left);
  CHECK(ks.verdict == Verdict::pass);
  CHECK(side_fraction_test(left, n, st.p_left).verdict == Verdict::pass);
  CHECK(independence_test(t, s).verdict == Verdict::pass);
}

TEST_CASE("stop rules replay identically on recorded logs") {
  const TadModel& m = tilted_model();
  for (Variant v : {Variant::idealized, Variant::modified, Variant::original}) {
    const ReplayData d = replay_data(v, m, 0, 200, 23, {});
    CAPTURE(to_string(v));
    CHECK(d.runs == 200);
    CHECK(d.incomplete == 0);
    CHECK(d.matches == d.runs);
    CHECK(d.post_stop_events > 0);
    if (v == Variant::modified) CHECK(d.violations == 0);
  }
}

TEST_CASE("replay of a hand-made log") {
  const TadModel& m = tilted_model();
  const BasinModel& bm = m.basin(0);
  const double dt = m.cfg().dt;
  std::vector<ExitAttempt> log(3);
  log[0].side = Side::right;
  log[0].steps_sim = 1000;
  log[0].t_sim = 1000 * dt;
  log[1].side = Side::left;
  log[1].steps_sim = 1500;
  log[1].t_sim = 1500 * dt;
  const double t_right = extrapolate_exit_time(1.0, bm.basin.barrier(Side::right), 10.0 / 3.0, 10.0);
  const double t_left = extrapolate_exit_time(1.5, bm.basin.barrier(Side::left), 10.0 / 3.0, 10.0);
  const double t_stop = stop_time_modified(std::min(t_left, t_right), m.cfg().e_min, 10.0 / 3.0, 10.0);
  log[2].side = Side::left;
  log[2].steps_sim = static_cast<std::int64_t>(std::floor(t_stop / dt)) + 1;
  log[2].t_sim = log[2].steps_sim * dt;
  const ReplayResult r = replay(Variant::modified, m, 0, log);
  CHECK(r.complete);
  CHECK(r.t_min_lo == doctest::Approx(std::min(t_left, t_right)));
  CHECK(r.i_min_lo == (t_left < t_right ? Side::left : Side::right));
  CHECK(count_guarantee_violations(m, 0, log) == 0);
  log.pop_back();
  CHECK_FALSE(replay(Variant::modified, m, 0, log).complete);
}

TEST_CASE("original TAD searches longer as delta shrinks") {
  double prev_attempts = 0.0, prev_stop = 0.0;
  for (double delta : {0.5, 0.01, 1e-6}) {
    TadConfig c = tilted_cfg(Variant::original);
    c.delta = delta;
    const TadModel m(tilted_quartic(0.1), c);
    const auto rs = exit_step_ensemble(Variant::original, m, 0, 200, 29, 0, {}, {});
    double att = 0.0, stop = 0.0;
    for (const auto& r : rs) {
      att += r.n_attempts;
      stop += r.t_stop;
    }
    CAPTURE(delta);
    CHECK(att > prev_attempts);
    CHECK(stop > prev_stop);
    prev_attempts = att;
    prev_stop = stop;
  }
}

TEST_CASE("first exit times per side at high temperature") {
  const TadModel& m = tilted_model();
  const auto out = first_exit_law_study(m, 0, 2000, 31, {});
  MESSAGE("statistic " << out.report.statistic);
  CHECK(out.report.verdict == Verdict::pass);
}

TEST_CASE("KMC sampling") {
  const BasinTopology top = analyze(quartic_well());
  const std::size_t n = 10000;
  std::vector<double> one, two;
  std::size_t left = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng r1(37, i), r2(38, i);
    const MetastablePath a = run_kmc(top, {{0.0, 2.0}}, 1e9, r1, 0);
    REQUIRE(a.segments.size() == 1);
    CHECK(a.segments[0].end == SegmentEnd::right);
    CHECK(a.segments[0].terminal);
    one.push_back(a.segments[0].duration);
    const MetastablePath b = run_kmc(top, {{2.0, 1.0}}, 1e9, r2, 0);
    b.check(top);
    two.push_back(b.segments[0].duration);
    left += b.segments[0].end == SegmentEnd::left;
  }
  CHECK(ks_one_sample_exponential(one, 2.0).verdict == Verdict::pass);
  CHECK(std::abs(static_cast<double>(left) / n - 2.0 / 3.0) < 0.015);
  const Mean m2 = mean_se(two);
  CHECK(std::abs(m2.mean - 1.0 / 3.0) < 2.0 * m2.se);

  Rng r(1, 0);
  const MetastablePath cut = run_kmc(top, {{1e-9, 1e-9}}, 5.0, r, 0);
  REQUIRE(cut.segments.size() == 1);
  CHECK(cut.segments[0].end == SegmentEnd::none);
  CHECK(cut.total_time() == 5.0);
  CHECK_THROWS(run_kmc(top, {{-1.0, 1.0}}, 5.0, r, 0));
  CHECK_THROWS(run_kmc(top, {{0.0, 0.0}}, 5.0, r, 0));
}

TEST_CASE("KMC on the triple well moves between neighbours") {
  const TadModel m(periodic_wells(2, 1.0), [] {
    TadConfig c;
    c.beta_hi = 2.0;
    c.beta_lo = 4.0;
    return c;
  }());
  const RateTable rates = exact_rates(m);
  REQUIRE(rates.size() == 2);
  CHECK(rates[0][0] == doctest::Approx(m.basin(0).stats_lo.rate(Side::left)));
  const RateTable kr = kramers_rates(m.topology(), 4.0);
  CHECK(kr[1][1] == doctest::Approx(kramers_rate(m.basin(1).basin, Side::right, 4.0)));
  Rng rng(41, 0);
  int interior = 0;
  for (int i = 0; i < 200; ++i) {
    const MetastablePath p = run_kmc(m.topology(), rates, 1e6, rng, 0);
    p.check(m.topology());
    interior += static_cast<int>(p.segments.size()) - 1;
  }
  CHECK(interior > 0);
}

TEST_CASE("direct paths") {
  const Potential1D pot = periodic_wells(2, 1.0);
  const BasinTopology top = analyze(pot);
  bool both = false;
  for (std::uint64_t i = 0; i < 20 && !both; ++i) {
    Rng rng(43, i);
    const MetastablePath p = run_direct(pot, top, 6.0, top.basin(0).x0, 1e5, 1e-3, rng);
    p.check(top);
    CHECK_FALSE(p.truncated);
    CHECK((p.segments.back().terminal || p.total_time() == doctest::Approx(1e5)));
    for (const auto& s : p.segments) both = both || s.basin == 1;
  }
  CHECK(both);

  Rng rng(44, 0);
  const MetastablePath tiny = run_direct(pot, top, 6.0, 1.0, 5e-4, 1e-3, rng);
  REQUIRE(tiny.segments.size() == 1);
  CHECK(tiny.segments[0].end == SegmentEnd::none);
  CHECK(tiny.segments[0].basin == 0);
  const MetastablePath none = run_direct(pot, top, 6.0, 3.2, 0.0, 1e-3, rng);
  REQUIRE(none.segments.size() == 1);
  CHECK(none.segments[0].basin == 1);
  CHECK(none.total_time() == 0.0);
  none.check(top);
}

TEST_CASE("QSD-started sojourns in a triple-well basin are exponential") {
  const Potential1D pot = periodic_wells(2, 1.0);
  const BasinTopology top = analyze(pot);
  const EigenPair e = solve_principal_eigenpair(pot, top.basin(0), 4.0);
  const ExitSample ex = qsd_exits(ForceField::from(pot), e, 1e-4, 2000, 45, 0, {});
  CHECK(ks_one_sample_exponential(ex.times, e.lambda).verdict == Verdict::pass);
}

TEST_CASE("path consistency checks") {
  const BasinTopology top = analyze(periodic_wells(2, 1.0));
  MetastablePath ok;
  ok.segments = {{0, 1.0, SegmentEnd::right, false}, {1, 2.0, SegmentEnd::right, true}};
  CHECK_NOTHROW(ok.check(top));
  CHECK(ok.total_time() == 3.0);
  CHECK(exit_side_label(ok.segments[1]) == "right_terminal");
  MetastablePath jump = ok;
  jump.segments[0].end = SegmentEnd::left;
  CHECK_THROWS_AS(jump.check(top), TopologyError);
  MetastablePath neg = ok;
  neg.segments[0].duration = 0.0;
  CHECK_THROWS_AS(neg.check(top), TopologyError);
  MetastablePath wall = ok;
  wall.segments[1].end = SegmentEnd::left;
  CHECK_THROWS_AS(wall.check(top), TopologyError);
  MetastablePath empty;
  CHECK_THROWS_AS(empty.check(top), TopologyError);
}

TEST_CASE("TAD paths") {
  TadConfig c;
  c.beta_hi = 2.0;
  c.beta_lo = 6.0;
  c.e_min = 1.0;
  c.t_max = 0.0;
  const TadModel zero(periodic_wells(2, 1.0), c);
  for (Variant v : {Variant::idealized, Variant::modified, Variant::original}) {
    Rng rng(47, 0);
    const TadRun r = run_tad(v, zero, 1.0, rng);
    REQUIRE(r.path.segments.size() == 1);
    CHECK(r.path.total_time() == 0.0);
    CHECK(r.path.segments[0].end == SegmentEnd::none);
    r.path.check(zero.topology());
  }
  c.t_max = 20000.0;
  const TadModel m(periodic_wells(2, 1.0), c);
  for (Variant v : {Variant::idealized, Variant::modified, Variant::original}) {
    CAPTURE(to_string(v));
    for (std::uint64_t i = 0; i < 10; ++i) {
      Rng rng(48, i);
      const TadRun r = run_tad(v, m, 3.0, rng);
      r.path.check(m.topology());
      CHECK(r.path.segments.front().basin == 1);
      CHECK(r.path.total_time() <= c.t_max * (1.0 + 1e-12));
      CHECK(r.steps_hi > 0);
    }
  }
}

TEST_CASE("idealized TAD paths match direct paths on the triple well") {
  TadConfig c;
  c.beta_hi = 10.0 / 3.0;
  c.beta_lo = 10.0;
  c.dt = 1e-3;
  c.t_max = 1e6;
  const Potential1D pot = periodic_wells(2, 1.0);
  const TadModel m(pot, c);
  const BasinTopology& top = m.topology();
  const double x0 = top.basin(0).x0;
  const std::size_t n = 300;
  const auto tad = run_ensemble(m.field(), n, 51, 0, [&](std::size_t, Rng& rng) {
    return tad_path_sim(Variant::idealized, m, x0, rng);
  });
  const auto dir = run_ensemble(m.field(), n, 52, 0, [&](std::size_t, Rng&) {
    return direct_path_sim(top, c.beta_lo, x0, c.t_max, c.dt, 10'000'000'000);
  });
  std::vector<double> st, sd;
  std::size_t it = 0, id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tad[i].path.check(top);
    dir[i].check(top);
    const auto& a = tad[i].path.segments.front();
    const auto& b = dir[i].segments.front();
    REQUIRE(a.end != SegmentEnd::none);
    REQUIRE(b.end != SegmentEnd::none);
    st.push_back(a.duration);
    sd.push_back(b.duration);
    it += !a.terminal;
    id += !b.terminal;
  }
  const Mean mt = mean_se(st), md = mean_se(sd);
  MESSAGE("sojourn " << mt.mean << " vs " << md.mean << ", interior " << it << " vs " << id);
  CHECK(std::abs(mt.mean - md.mean) < 2.0 * std::hypot(mt.se, md.se));
  CHECK(fractions_agree(it, n, id, n, 2.0).verdict == Verdict::pass);
  double boost = 0.0;
  for (const auto& r : tad) boost += r.boost();
  MESSAGE("mean boost " << boost / n);
}
