#include <doctest.h>

#include <cmath>
#include <vector>

#include "tadlab/error.hpp"
#include "tadlab/verify.hpp"

using namespace tadlab;

namespace {

std::vector<double> exp_draws(double rate, std::size_t n, std::uint64_t stream) {
  Rng rng(61, stream);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.exponential(rate);
  return v;
}

}  // namespace

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_critical() == doctest::Approx(1.6276).epsilon(1e-4));
  CHECK(kolmogorov_critical(0.05) == doctest::Approx(1.3581).epsilon(1e-4));
  CHECK(kolmogorov_sf(kolmogorov_critical()) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(0.3) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
  // Continuity across the switch between the two series.
  CHECK(kolmogorov_sf(1.0 - 1e-12) == doctest::Approx(kolmogorov_sf(1.0)).epsilon(1e-9));
}

TEST_CASE("one-sample exponential KS") {
  const auto s = exp_draws(2.0, 10000, 0);
  const TestReport ok = ks_one_sample_exponential(s, 2.0);
  CHECK(ok.verdict == Verdict::pass);
  CHECK(ok.threshold == doctest::Approx(kolmogorov_critical() / 100.0));
  const TestReport bad = ks_one_sample_exponential(s, 4.0);
  CHECK(bad.verdict == Verdict::fail);
  CHECK(bad.statistic == doctest::Approx(0.25).epsilon(0.05));
  const std::vector<double> constant(1000, 0.5);
  CHECK(ks_one_sample_exponential(constant, 2.0).verdict == Verdict::fail);
  CHECK_THROWS(ks_one_sample_exponential(std::vector<double>{}, 2.0));
  CHECK_THROWS(ks_one_sample_exponential(s, 0.0));
}

TEST_CASE("one-sample KS rejects at about the nominal rate under the null") {
  int rejections = 0;
  for (std::uint64_t k = 0; k < 400; ++k) rejections += ks_one_sample_exponential(exp_draws(1.0, 500, 100 + k), 1.0).verdict == Verdict::fail;
  CHECK(rejections <= 12);  // 4 expected
}

TEST_CASE("two-sample KS") {
  const auto a = exp_draws(1.0, 10000, 1);
  const TestReport same = ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.verdict == Verdict::pass);
  CHECK(ks_two_sample(a, exp_draws(1.0, 10000, 2)).verdict == Verdict::pass);
  const TestReport diff = ks_two_sample(a, exp_draws(1.5, 10000, 3));
  CHECK(diff.verdict == Verdict::fail);
  // sup |e^{-t} - e^{-1.5 t}| at t = 2 ln 1.5.
  CHECK(diff.statistic == doctest::Approx(std::pow(1.5, -2.0) - std::pow(1.5, -3.0)).epsilon(0.15));
  const std::vector<double> x{1, 2, 2, 3}, y{2, 2, 2, 2};
  CHECK(ks_distance(x, y) == doctest::Approx(0.25));
  CHECK_THROWS(ks_two_sample(std::vector<double>{}, a));
}

TEST_CASE("side fraction z-test") {
  CHECK(side_fraction_test(5000, 10000, 0.5).verdict == Verdict::pass);
  const TestReport bad = side_fraction_test(6000, 10000, 0.5);
  CHECK(bad.verdict == Verdict::fail);
  CHECK(bad.statistic == doctest::Approx(20.0));
  Rng rng(62, 0);
  std::vector<Side> coin(10000);
  for (auto& s : coin) s = rng.uniform() < 0.5 ? Side::left : Side::right;
  CHECK(side_fraction_test(coin, 0.5).verdict == Verdict::pass);
  CHECK(side_fraction_within(5100, 10000, 0.5, 0.015).verdict == Verdict::pass);
  CHECK(side_fraction_within(5200, 10000, 0.5, 0.015).verdict == Verdict::fail);
  CHECK(side_fraction_within_se(5090, 10000, 0.5, 2.0).verdict == Verdict::pass);
  CHECK(side_fraction_within_se(5110, 10000, 0.5, 2.0).verdict == Verdict::fail);
  CHECK(fractions_agree(5000, 10000, 5100, 10000, 2.0).verdict == Verdict::pass);
  CHECK(fractions_agree(5000, 10000, 5300, 10000, 2.0).verdict == Verdict::fail);
}

TEST_CASE("independence test") {
  Rng rng(63, 0);
  std::vector<double> t(10000);
  std::vector<Side> s(10000);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = rng.exponential(1.0);
    s[i] = rng.uniform() < 0.3 ? Side::left : Side::right;
  }
  CHECK(independence_test(t, s).verdict == Verdict::pass);
  std::vector<double> dep(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) dep[i] = 1.0 + (s[i] == Side::left);
  CHECK(independence_test(dep, s).verdict == Verdict::fail);
  std::vector<Side> one(t.size(), Side::left);
  one[0] = Side::right;
  CHECK(independence_test(t, one).verdict == Verdict::informational);
}

TEST_CASE("symmetric identity") {
  const std::vector<double> a{2.0, 3.0};
  CHECK(check_symmetric_identity(a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  const std::vector<double> one{1.0};
  CHECK(check_symmetric_identity(one) == 0.0);
  Rng rng(64, 0);
  const TestReport r = symmetric_identity_study(100, 7, rng);
  MESSAGE("max relative error " << r.statistic);
  CHECK(r.verdict == Verdict::pass);
  CHECK(r.statistic < 1e-9);
  CHECK_THROWS(check_symmetric_identity(std::vector<double>{1.0, -2.0}));
  CHECK_THROWS(check_symmetric_identity(std::vector<double>(9, 1.0)));
  CHECK_THROWS(check_symmetric_identity(std::vector<double>{}));
}

TEST_CASE("minimum of exponentials") {
  Rng rng(65, 0);
  const std::vector<double> r11{1.0, 1.0}, r21{2.0, 1.0}, r5{5.0};
  const TestReport a = min_exponential_properties(r11, 10000, rng);
  CHECK(a.verdict == Verdict::pass);
  const TestReport b = min_exponential_properties(r21, 10000, rng);
  CHECK(b.verdict == Verdict::pass);
  const TestReport c = min_exponential_properties(r5, 10000, rng);
  CHECK(c.verdict == Verdict::pass);
  CHECK_THROWS(min_exponential_properties(std::vector<double>{1.0, 0.0}, 100, rng));
}

TEST_CASE("geometric sums of exit times") {
  Rng rng(66, 0);
  const std::vector<double> k1{1.0}, half{0.5, 0.5}, skew{0.9, 0.1};
  CHECK(geometric_sum_law_test(1.0, k1, 10000, rng).verdict == Verdict::pass);
  CHECK(geometric_sum_law_test(1.0, half, 10000, rng).verdict == Verdict::pass);
  const TestReport s = geometric_sum_law_test(1.0, skew, 10000, rng);
  CHECK(s.verdict == Verdict::pass);
  CHECK_THROWS(geometric_sum_law_test(1.0, std::vector<double>{0.5, 0.6}, 100, rng));
}

TEST_CASE("report plumbing") {
  const TestReport p = make_report("a", 0.5, 1.0, 10);
  CHECK(p.verdict == Verdict::pass);
  CHECK(make_report("b", 1.5, 1.0, 10).verdict == Verdict::fail);
  TestReport info = make_report("c", 9.0, 1.0, 10);
  info.verdict = Verdict::informational;
  std::vector<TestReport> parts{p, info};
  CHECK(combine("all", parts).verdict == Verdict::pass);
  parts.push_back(make_report("d", 3.0, 2.0, 10));
  const TestReport all = combine("all", parts);
  CHECK(all.verdict == Verdict::fail);
  CHECK(all.statistic == doctest::Approx(1.5));
  TestReport n = p;
  n.note("seed", 42.0).note("label", "x");
  CHECK(n.get("seed") == "42");
  CHECK(n.get("label") == "x");
  CHECK(n.get("missing") == "");
  CHECK(std::string(to_string(Verdict::informational)) == "informational");
}

TEST_CASE("statistics are reproducible from the seed") {
  const std::vector<double> rates{2.0, 1.0};
  Rng a(67, 0), b(67, 0);
  CHECK(min_exponential_properties(rates, 2000, a).statistic == min_exponential_properties(rates, 2000, b).statistic);
}

TEST_CASE("line fit and correlation") {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const auto [slope, icept] = fit_line(x, y);
  CHECK(slope == doctest::Approx(2.0));
  CHECK(icept == doctest::Approx(1.0));
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  const std::vector<double> z{4, 3, 2, 1};
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
}
