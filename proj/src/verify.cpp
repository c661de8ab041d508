#include "tadlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "tadlab/error.hpp"

namespace tadlab {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require_samples(std::size_t n, const char* what) {
  if (n == 0) throw ConfigError(std::string(what) + ": empty sample");
}

double z_critical(double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha / 2.0));
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::informational: return "informational";
  }
  return "?";
}

TestReport& TestReport::note(std::string key, std::string value) {
  metadata.emplace_back(std::move(key), std::move(value));
  return *this;
}

TestReport& TestReport::note(std::string key, double value) { return note(std::move(key), fmt(value)); }

std::string TestReport::get(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return {};
}

TestReport make_report(std::string name, double statistic, double threshold, std::size_t n) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.threshold = threshold;
  r.n = n;
  r.verdict = statistic <= threshold ? Verdict::pass : Verdict::fail;
  return r;
}

TestReport combine(std::string name, std::span<const TestReport> parts) {
  TestReport r;
  r.name = std::move(name);
  r.threshold = 1.0;
  r.verdict = Verdict::informational;
  double worst = 0.0;
  for (const TestReport& p : parts) {
    r.n = std::max(r.n, p.n);
    if (p.verdict == Verdict::informational) continue;
    worst = std::max(worst, p.threshold > 0.0 ? p.statistic / p.threshold : std::numeric_limits<double>::infinity());
    if (r.verdict != Verdict::fail) r.verdict = p.verdict;
    r.note(p.name, std::string(to_string(p.verdict)) + " " + fmt(p.statistic) + "/" + fmt(p.threshold));
  }
  r.statistic = worst;
  return r;
}

double kolmogorov_sf(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.0) {
    // P(K <= x) = sqrt(2 pi)/x sum_k exp(-(2k-1)^2 pi^2 / (8 x^2)); fast for small x.
    double s = 0.0;
    for (int k = 1; k < 20; ++k) {
      const double m = 2.0 * k - 1.0;
      s += std::exp(-m * m * std::numbers::pi * std::numbers::pi / (8.0 * x * x));
    }
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double t = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? t : -t);
    if (t < 1e-300) break;
  }
  return 2.0 * s;
}

double kolmogorov_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("significance level must lie in (0, 1)");
  double lo = 0.2, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (lo + hi);
    (kolmogorov_sf(m) > alpha ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

double ks_distance_exponential(std::span<const double> samples, double rate) {
  require_samples(samples.size(), "ks_one_sample_exponential");
  if (!(rate > 0.0)) throw ConfigError("ks_one_sample_exponential: rate must be positive");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = s[i] > 0.0 ? -std::expm1(-rate * s[i]) : 0.0;
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

TestReport ks_one_sample_exponential(std::span<const double> samples, double rate, double alpha) {
  const double d = ks_distance_exponential(samples, rate);
  const double n = static_cast<double>(samples.size());
  TestReport r = make_report("ks_exponential", d, kolmogorov_critical(alpha) / std::sqrt(n), samples.size());
  r.note("rate", rate).note("alpha", alpha);
  return r;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  require_samples(a.size(), "ks_two_sample");
  require_samples(b.size(), "ks_two_sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha) {
  const double d = ks_distance(a, b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double crit = kolmogorov_critical(alpha) * std::sqrt((na + nb) / (na * nb));
  TestReport r = make_report("ks_two_sample", d, crit, std::min(a.size(), b.size()));
  r.note("n_a", na).note("n_b", nb).note("alpha", alpha);
  return r;
}

TestReport side_fraction_test(std::size_t n_left, std::size_t n, double p, double alpha) {
  if (n == 0) throw ConfigError("side_fraction_test: empty sample");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("side_fraction_test: p must lie in (0, 1)");
  const double nn = static_cast<double>(n);
  const double z = (static_cast<double>(n_left) - nn * p) / std::sqrt(nn * p * (1.0 - p));
  TestReport r = make_report("side_fraction", std::abs(z), z_critical(alpha), n);
  r.note("fraction_left", static_cast<double>(n_left) / nn).note("p_expected", p);
  return r;
}

TestReport side_fraction_test(std::span<const Side> sides, double p, double alpha) {
  const auto nl = static_cast<std::size_t>(std::count(sides.begin(), sides.end(), Side::left));
  return side_fraction_test(nl, sides.size(), p, alpha);
}

TestReport side_fraction_within(std::size_t n_left, std::size_t n, double p, double tol) {
  if (n == 0) throw ConfigError("side_fraction_within: empty sample");
  const double f = static_cast<double>(n_left) / static_cast<double>(n);
  TestReport r = make_report("side_fraction_abs", std::abs(f - p), tol, n);
  r.note("fraction_left", f).note("p_expected", p);
  return r;
}

TestReport side_fraction_within_se(std::size_t n_left, std::size_t n, double p, double k) {
  if (n == 0) throw ConfigError("side_fraction_within_se: empty sample");
  const double nn = static_cast<double>(n);
  const double f = static_cast<double>(n_left) / nn;
  const double se = std::sqrt(p * (1.0 - p) / nn);
  TestReport r = make_report("side_fraction_se", std::abs(f - p), k * se, n);
  r.note("fraction_left", f).note("p_expected", p).note("se", se);
  return r;
}

TestReport fractions_agree(std::size_t left_a, std::size_t n_a, std::size_t left_b, std::size_t n_b, double k) {
  if (n_a == 0 || n_b == 0) throw ConfigError("fractions_agree: empty sample");
  const double fa = static_cast<double>(left_a) / static_cast<double>(n_a);
  const double fb = static_cast<double>(left_b) / static_cast<double>(n_b);
  const double se = std::sqrt(fa * (1.0 - fa) / static_cast<double>(n_a) + fb * (1.0 - fb) / static_cast<double>(n_b));
  TestReport r = make_report("fractions_agree", std::abs(fa - fb), k * se, std::min(n_a, n_b));
  r.note("fraction_a", fa).note("fraction_b", fb).note("se", se);
  return r;
}

TestReport independence_test(std::span<const double> times, std::span<const Side> sides, double alpha) {
  if (times.size() != sides.size()) throw ConfigError("independence_test: size mismatch");
  std::vector<double> l, r;
  for (std::size_t i = 0; i < times.size(); ++i) (sides[i] == Side::left ? l : r).push_back(times[i]);
  if (l.size() < 100 || r.size() < 100) {
    TestReport t;
    t.name = "independence";
    t.n = times.size();
    t.verdict = Verdict::informational;
    t.note("reason", "a side has fewer than 100 samples");
    t.note("n_left", static_cast<double>(l.size())).note("n_right", static_cast<double>(r.size()));
    return t;
  }
  TestReport t = ks_two_sample(l, r, alpha);
  t.name = "independence";
  return t;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("pearson: need two equal samples of size >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double check_symmetric_identity(std::span<const double> a) {
  if (a.empty() || a.size() > 8) throw ConfigError("check_symmetric_identity: need 1 <= n <= 8");
  for (double v : a)
    if (!(v > 0.0)) throw ConfigError("check_symmetric_identity: entries must be positive");
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double total = 0.0;
  do {
    double tail = 0.0;
    double prod = 1.0;
    for (std::size_t i = a.size(); i-- > 0;) {
      tail += a[perm[i]];
      prod /= tail;
    }
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  double expect = 1.0;
  for (double v : a) expect /= v;
  return std::abs(total - expect) / expect;
}

TestReport symmetric_identity_study(std::size_t n_vectors, std::size_t max_n, Rng& rng, double tol) {
  if (max_n < 3 || max_n > 8) throw ConfigError("symmetric identity study: max_n must lie in [3, 8]");
  double worst = 0.0;
  std::vector<double> a;
  for (std::size_t v = 0; v < n_vectors; ++v) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng() % (max_n - 2));
    a.resize(n);
    for (double& x : a) x = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
    worst = std::max(worst, check_symmetric_identity(a));
  }
  TestReport r = make_report("symmetric_identity", worst, tol, n_vectors);
  r.note("max_n", static_cast<double>(max_n));
  return r;
}

TestReport min_exponential_properties(std::span<const double> rates, std::size_t n_samples, Rng& rng,
                                      double alpha) {
  if (rates.empty()) throw ConfigError("min_exponential_properties: no rates");
  for (double q : rates)
    if (!(q > 0.0)) throw ConfigError("min_exponential_properties: rates must be positive");
  const double total = std::accumulate(rates.begin(), rates.end(), 0.0);
  std::vector<double> t(n_samples);
  std::vector<std::size_t> idx(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double ti = rng.exponential(rates[i]);
      if (ti < best) {
        best = ti;
        arg = i;
      }
    }
    t[s] = best;
    idx[s] = arg;
  }
  std::vector<TestReport> parts;
  parts.push_back(ks_one_sample_exponential(t, total, alpha));
  parts.back().name = "min_law";
  if (rates.size() > 1) {
    std::vector<double> counts(rates.size(), 0.0);
    for (std::size_t i : idx) counts[i] += 1.0;
    double x2 = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double e = static_cast<double>(n_samples) * rates[i] / total;
      x2 += (counts[i] - e) * (counts[i] - e) / e;
    }
    const boost::math::chi_squared chi(static_cast<double>(rates.size() - 1));
    parts.push_back(make_report("argmin_law", x2, boost::math::quantile(boost::math::complement(chi, alpha)),
                                n_samples));
    for (std::size_t i = 0; i < rates.size(); ++i) {
      std::vector<double> cond;
      for (std::size_t s = 0; s < n_samples; ++s)
        if (idx[s] == i) cond.push_back(t[s]);
      if (cond.size() < 100) continue;
      parts.push_back(ks_one_sample_exponential(cond, total, alpha));
      parts.back().name = "min_given_argmin_" + std::to_string(i);
    }
  }
  TestReport r = combine("min_exponential", parts);
  r.n = n_samples;
  return r;
}

TestReport geometric_sum_law_test(double lambda, std::span<const double> probs, std::size_t n_samples, Rng& rng,
                                  double alpha) {
  if (!(lambda > 0.0)) throw ConfigError("geometric_sum_law_test: lambda must be positive");
  if (probs.empty()) throw ConfigError("geometric_sum_law_test: no probabilities");
  const double psum = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double p : probs)
    if (!(p > 0.0)) throw ConfigError("geometric_sum_law_test: probabilities must be positive");
  if (std::abs(psum - 1.0) > 1e-12) throw ConfigError("geometric_sum_law_test: probabilities must sum to 1");
  const std::size_t k = probs.size();
  std::vector<std::vector<double>> T(k, std::vector<double>(n_samples, 0.0));
  std::vector<bool> seen(k);
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::fill(seen.begin(), seen.end(), false);
    std::size_t left = k;
    double clock = 0.0;
    while (left > 0) {
      clock += rng.exponential(lambda);
      double u = rng.uniform() * psum;
      std::size_t i = 0;
      while (i + 1 < k && u >= probs[i]) u -= probs[i++];
      if (!seen[i]) {
        seen[i] = true;
        T[i][s] = clock;
        --left;
      }
    }
  }
  std::vector<TestReport> parts;
  for (std::size_t i = 0; i < k; ++i) {
    parts.push_back(ks_one_sample_exponential(T[i], lambda * probs[i], alpha));
    parts.back().name = "marginal_" + std::to_string(i);
  }
  const double corr_tol = 3.0 / std::sqrt(static_cast<double>(n_samples));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      parts.push_back(make_report("corr_" + std::to_string(i) + std::to_string(j), std::abs(pearson(T[i], T[j])),
                                  corr_tol, n_samples));
  TestReport r = combine("geometric_sum_law", parts);
  r.n = n_samples;
  return r;
}

std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace tadlab
