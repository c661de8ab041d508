#pragma once

// Statistical tests used by the verification studies.  All tests run at a
// fixed significance level (0.01 unless stated) and decide their verdict by
// comparing one statistic against one threshold.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tadlab/potential.hpp"
#include "tadlab/rng.hpp"

namespace tadlab {

enum class Verdict { pass, fail, informational };
const char* to_string(Verdict v);

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  std::size_t n = 0;
  Verdict verdict = Verdict::informational;
  std::vector<std::pair<std::string, std::string>> metadata;

  bool passed() const { return verdict != Verdict::fail; }
  TestReport& note(std::string key, std::string value);
  TestReport& note(std::string key, double value);
  /// First metadata value for key, or "".
  std::string get(const std::string& key) const;
};

/// Pass iff statistic < threshold.
TestReport make_report(std::string name, double statistic, double threshold, std::size_t n);
/// Combined verdict: fail if any part fails; statistic is the worst
/// statistic/threshold ratio.
TestReport combine(std::string name, std::span<const TestReport> parts);

inline constexpr double kAlpha = 0.01;

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);
/// x with P(K > x) = alpha (1.6276 at 0.01).
double kolmogorov_critical(double alpha = kAlpha);

/// sup |F_n - (1 - e^{-rate t})|, rejected when above K_alpha / sqrt(n).
TestReport ks_one_sample_exponential(std::span<const double> samples, double rate, double alpha = kAlpha);
double ks_distance_exponential(std::span<const double> samples, double rate);

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha = kAlpha);
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Two-sided binomial z-test of the left fraction.
TestReport side_fraction_test(std::size_t n_left, std::size_t n, double p_expected, double alpha = kAlpha);
TestReport side_fraction_test(std::span<const Side> sides, double p_expected, double alpha = kAlpha);
/// |fraction - p| <= tol (absolute tolerance, no testing theory).
TestReport side_fraction_within(std::size_t n_left, std::size_t n, double p, double tol);
/// |fraction - p| <= k standard errors of the binomial with parameter p.
TestReport side_fraction_within_se(std::size_t n_left, std::size_t n, double p, double k);
/// Two empirical fractions agree within k standard errors of their difference.
TestReport fractions_agree(std::size_t left_a, std::size_t n_a, std::size_t left_b, std::size_t n_b, double k);

/// Two-sample KS between the times of left exits and of right exits.
/// Informational if a side has fewer than 100 samples.
TestReport independence_test(std::span<const double> times, std::span<const Side> sides,
                             double alpha = kAlpha);

double pearson(std::span<const double> a, std::span<const double> b);

/// sum over permutations of prod_i (sum_{j>=i} a_sigma(j))^{-1}, compared to
/// prod_i a_i^{-1}; returns the relative error.  1 <= n <= 8.
double check_symmetric_identity(std::span<const double> a);
/// Random vectors (sizes 3..max_n, entries log-uniform in [1e-3, 1e3]).
TestReport symmetric_identity_study(std::size_t n_vectors, std::size_t max_n, Rng& rng, double tol = 1e-9);

/// T = min_i T_i and I = argmin for independent exponentials: KS of T vs
/// E(sum), chi-square of I vs rate_i / sum, KS of T given I per pair of
/// outcomes.  The chi-square part is skipped for a single rate.
TestReport min_exponential_properties(std::span<const double> rates, std::size_t n_samples, Rng& rng,
                                      double alpha = kAlpha);

/// Draws (tau_j, I_j) iid with tau ~ E(lambda), P(I = i) = probs[i], and
/// T_i = tau_1 + ... + tau_{N_i}, N_i the first j with I_j = i.  Checks
/// T_i ~ E(lambda p_i) by KS and pairwise |corr| < 3 / sqrt(n).
TestReport geometric_sum_law_test(double lambda, std::span<const double> probs, std::size_t n_samples,
                                  Rng& rng, double alpha = kAlpha);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace tadlab
