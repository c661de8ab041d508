#include "tadlab/studies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tadlab/dynamics.hpp"
#include "tadlab/error.hpp"

namespace tadlab {
namespace {

// Disjoint stream ranges, so studies sharing a seed never share noise.
constexpr std::uint64_t kStreamQsdExits = 1ull << 40;
constexpr std::uint64_t kStreamExitSteps = 2ull << 40;
constexpr std::uint64_t kStreamSecondary = 3ull << 40;

Sim<ExitEvent> qsd_exit_sim(const QsdSampler& s, Interval b, double beta, double dt, std::int64_t max_steps,
                            Rng& rng) {
  const double x = s(rng);
  co_return co_await exit_sim(x, b, beta, dt, max_steps);
}

ExitSample exits_for(const Potential1D& pot, int label, double beta, double dt, std::size_t n, std::uint64_t seed,
                     const EnsembleOptions& opt, std::size_t grid_n, EigenPair& eig, ExitStatistics& st) {
  const BasinTopology top = analyze(pot);
  eig = solve_principal_eigenpair(pot, top.basin(label), beta, grid_n);
  st = exit_statistics(eig);
  return qsd_exits(ForceField::from(pot), eig, dt, n, seed, kStreamQsdExits, opt);
}

CsvTable kv_table() { return CsvTable({"quantity", "value"}); }

void kv(CsvTable& t, const std::string& k, double v) { t.add({k, csv_num(v)}); }

std::vector<double> times_of(const std::vector<ExitStepResult>& rs) {
  std::vector<double> t;
  t.reserve(rs.size());
  for (const auto& r : rs) t.push_back(r.t_min_lo);
  return t;
}

std::size_t lefts_of(const std::vector<ExitStepResult>& rs) {
  return static_cast<std::size_t>(
      std::count_if(rs.begin(), rs.end(), [](const ExitStepResult& r) { return r.i_min_lo == Side::left; }));
}

TestReport informational(std::string name, std::string reason) {
  TestReport r;
  r.name = std::move(name);
  r.verdict = Verdict::informational;
  r.note("reason", std::move(reason));
  return r;
}

}  // namespace

std::size_t ExitSample::n_left() const {
  return static_cast<std::size_t>(std::count(sides.begin(), sides.end(), Side::left));
}

double ExitSample::mean_time() const {
  return times.empty() ? 0.0 : std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
}

ExitSample qsd_exits(const ForceField& f, const EigenPair& eig, double dt, std::size_t n, std::uint64_t seed,
                     std::uint64_t stream_base, const EnsembleOptions& opt, std::int64_t max_steps) {
  const QsdSampler sampler(eig);
  const Interval b{eig.a, eig.b};
  auto events = run_ensemble(
      f, n, seed, stream_base,
      [&](std::size_t, Rng& rng) { return qsd_exit_sim(sampler, b, eig.beta, dt, max_steps, rng); }, opt);
  ExitSample s;
  for (const auto& e : events) {
    s.times.push_back(e.time);
    s.sides.push_back(e.side);
    s.steps += e.steps;
  }
  return s;
}

std::vector<ExitStepResult> exit_step_ensemble(Variant v, const TadModel& m, int label, std::size_t n,
                                               std::uint64_t seed, std::uint64_t stream_base,
                                               const ExitStepOptions& so, const EnsembleOptions& opt) {
  const double x0 = m.basin(label).basin.x0;
  return run_ensemble(
      m.field(), n, seed, stream_base,
      [&](std::size_t, Rng& rng) { return exit_step_sim(v, m, label, x0, rng, so); }, opt);
}

StudyOutput exit_law_study(const Potential1D& pot, int label, double beta, double dt, std::size_t n,
                           std::uint64_t seed, const EnsembleOptions& opt, double alpha, std::size_t grid_n) {
  EigenPair eig;
  ExitStatistics st;
  const ExitSample s = exits_for(pot, label, beta, dt, n, seed, opt, grid_n, eig, st);
  StudyOutput out;
  out.report = ks_one_sample_exponential(s.times, eig.lambda, alpha);
  out.report.name = "exit_law";
  out.report.note("beta", beta).note("dt", dt).note("seed", static_cast<double>(seed));
  out.csv_name = "exit_law.csv";
  out.table = kv_table();
  kv(out.table, "beta", beta);
  kv(out.table, "dt", dt);
  kv(out.table, "lambda_eig", eig.lambda);
  kv(out.table, "mean_exit_time", s.mean_time());
  kv(out.table, "ks_distance", out.report.statistic);
  kv(out.table, "ks_threshold", out.report.threshold);
  return out;
}

StudyOutput exit_side_study(const Potential1D& pot, int label, double beta, double dt, std::size_t n,
                            std::uint64_t seed, const EnsembleOptions& opt, double alpha, std::size_t grid_n) {
  EigenPair eig;
  ExitStatistics st;
  const ExitSample s = exits_for(pot, label, beta, dt, n, seed, opt, grid_n, eig, st);
  StudyOutput out;
  out.report = side_fraction_test(s.sides, st.p_left, alpha);
  out.report.name = "exit_side";
  out.report.note("beta", beta).note("dt", dt).note("seed", static_cast<double>(seed));
  out.csv_name = "exit_side.csv";
  out.table = kv_table();
  kv(out.table, "beta", beta);
  kv(out.table, "p_left_eig", st.p_left);
  kv(out.table, "fraction_left", static_cast<double>(s.n_left()) / static_cast<double>(n));
  kv(out.table, "abs_z", out.report.statistic);
  return out;
}

StudyOutput independence_study(const Potential1D& pot, int label, double beta, double dt, std::size_t n,
                               std::uint64_t seed, const EnsembleOptions& opt, double alpha, std::size_t grid_n) {
  EigenPair eig;
  ExitStatistics st;
  const ExitSample s = exits_for(pot, label, beta, dt, n, seed, opt, grid_n, eig, st);
  StudyOutput out;
  out.report = independence_test(s.times, s.sides, alpha);
  out.report.note("beta", beta).note("dt", dt).note("seed", static_cast<double>(seed));
  return out;
}

StudyOutput idealized_exit_step_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                                      const EnsembleOptions& opt, double alpha) {
  const BasinModel& bm = m.basin(label);
  const auto tad = exit_step_ensemble(Variant::idealized, m, label, n, seed, kStreamExitSteps, {}, opt);
  const ExitSample direct = qsd_exits(m.field(), *bm.eig_lo, m.cfg().dt, n, seed, kStreamQsdExits, opt);
  const auto t = times_of(tad);
  std::vector<TestReport> parts{ks_two_sample(t, direct.times, alpha),
                                fractions_agree(lefts_of(tad), n, direct.n_left(), n, 2.0)};
  StudyOutput out;
  out.report = combine("idealized_exit_step", parts);
  out.report.note("beta_hi", m.cfg().beta_hi).note("beta_lo", m.cfg().beta_lo).note("dt", m.cfg().dt);
  out.report.note("seed", static_cast<double>(seed));
  out.csv_name = "idealized_exit_step.csv";
  out.table = kv_table();
  kv(out.table, "lambda_lo_eig", bm.stats_lo.lambda);
  kv(out.table, "p_left_lo_eig", bm.stats_lo.p_left);
  kv(out.table, "mean_t_min_lo", std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(n));
  kv(out.table, "mean_direct", direct.mean_time());
  kv(out.table, "fraction_left_tad", static_cast<double>(lefts_of(tad)) / static_cast<double>(n));
  kv(out.table, "fraction_left_direct", static_cast<double>(direct.n_left()) / static_cast<double>(n));
  kv(out.table, "ks_distance", parts[0].statistic);
  kv(out.table, "ks_threshold", parts[0].threshold);
  return out;
}

StudyOutput first_exit_law_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                                 const EnsembleOptions& opt, double alpha) {
  const BasinModel& bm = m.basin(label);
  ExitStepOptions so;
  so.stop_enabled = false;
  const auto rs = exit_step_ensemble(Variant::idealized, m, label, n, seed, kStreamExitSteps, so, opt);
  std::vector<double> tl, tr;
  for (const auto& r : rs) {
    tl.push_back(*r.t_hi[0]);
    tr.push_back(*r.t_hi[1]);
  }
  std::vector<TestReport> parts{ks_one_sample_exponential(tl, bm.stats_hi.rate(Side::left), alpha),
                                ks_one_sample_exponential(tr, bm.stats_hi.rate(Side::right), alpha),
                                make_report("correlation", std::abs(pearson(tl, tr)),
                                            3.0 / std::sqrt(static_cast<double>(n)), n)};
  parts[0].name = "first_exit_left";
  parts[1].name = "first_exit_right";
  StudyOutput out;
  out.report = combine("first_exit_laws", parts);
  out.report.note("beta_hi", m.cfg().beta_hi).note("seed", static_cast<double>(seed));
  out.csv_name = "first_exit_laws.csv";
  out.table = kv_table();
  kv(out.table, "rate_left_hi", bm.stats_hi.rate(Side::left));
  kv(out.table, "rate_right_hi", bm.stats_hi.rate(Side::right));
  kv(out.table, "ks_left", parts[0].statistic);
  kv(out.table, "ks_right", parts[1].statistic);
  kv(out.table, "ks_threshold", parts[0].threshold);
  kv(out.table, "correlation", pearson(tl, tr));
  return out;
}

ReplayData replay_data(Variant v, const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                       const EnsembleOptions& opt, double horizon_factor) {
  const auto live = exit_step_ensemble(v, m, label, n, seed, kStreamExitSteps, {}, opt);
  const double x0 = m.basin(label).basin.x0;
  const auto logs = run_ensemble(
      m.field(), n, seed, kStreamExitSteps,
      [&](std::size_t i, Rng& rng) {
        ExitStepOptions so;
        so.stop_enabled = false;
        so.horizon = horizon_factor * live[i].t_stop + m.cfg().dt;
        return exit_step_sim(v, m, label, x0, rng, so);
      },
      opt);
  ReplayData d;
  d.runs = n;
  for (std::size_t i = 0; i < n; ++i) {
    const ReplayResult r = replay(v, m, label, logs[i].events);
    d.events += logs[i].events.size();
    if (!r.complete) {
      ++d.incomplete;
      continue;
    }
    const std::int64_t s_stop = static_cast<std::int64_t>(std::floor(r.t_stop / m.cfg().dt));
    for (const auto& e : logs[i].events)
      if (e.steps_sim > s_stop) ++d.post_stop_events;
    if (r.t_min_lo == live[i].t_min_lo && r.i_min_lo == live[i].i_min_lo) ++d.matches;
    if (v == Variant::modified) d.violations += static_cast<std::size_t>(count_guarantee_violations(m, label, logs[i].events));
  }
  return d;
}

StudyOutput replay_study(Variant v, const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                         const EnsembleOptions& opt) {
  const ReplayData d = replay_data(v, m, label, n, seed, opt);
  StudyOutput out;
  out.report = make_report(std::string("replay_") + to_string(v), static_cast<double>(n - d.matches), 0.0, n);
  out.report.note("matches", static_cast<double>(d.matches)).note("incomplete", static_cast<double>(d.incomplete));
  out.report.note("seed", static_cast<double>(seed));
  out.csv_name = std::string("replay_") + to_string(v) + ".csv";
  out.table = kv_table();
  kv(out.table, "runs", static_cast<double>(d.runs));
  kv(out.table, "matches", static_cast<double>(d.matches));
  kv(out.table, "incomplete_logs", static_cast<double>(d.incomplete));
  kv(out.table, "events", static_cast<double>(d.events));
  kv(out.table, "post_stop_events", static_cast<double>(d.post_stop_events));
  return out;
}

StudyOutput guarantee_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                            const EnsembleOptions& opt) {
  const ReplayData d = replay_data(Variant::modified, m, label, n, seed, opt);
  StudyOutput out;
  out.report = make_report("modified_stop_guarantee", static_cast<double>(d.violations), 0.0, n);
  out.report.note("post_stop_events", static_cast<double>(d.post_stop_events));
  out.report.note("e_min", m.cfg().e_min).note("seed", static_cast<double>(seed));
  if (d.incomplete > 0) {
    out.report.verdict = Verdict::fail;
    out.report.note("reason", "some logs ended before their stop time");
  }
  out.csv_name = "guarantee.csv";
  out.table = kv_table();
  kv(out.table, "runs", static_cast<double>(d.runs));
  kv(out.table, "post_stop_events", static_cast<double>(d.post_stop_events));
  kv(out.table, "violations", static_cast<double>(d.violations));
  return out;
}

BoostData boost_data(Variant v, const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                     const EnsembleOptions& opt) {
  const BasinModel& bm = m.basin(label);
  BoostData d;
  const auto tad = exit_step_ensemble(v, m, label, n, seed, kStreamExitSteps, {}, opt);
  d.direct = qsd_exits(m.field(), *bm.eig_lo, m.cfg().dt, n, seed, kStreamQsdExits, opt);
  double steps = 0.0;
  for (const auto& r : tad) {
    d.tad_times.push_back(r.t_min_lo);
    d.tad_sides.push_back(r.i_min_lo);
    steps += static_cast<double>(r.steps());
  }
  // Each low-temperature exit of a TAD path also pays one decorrelation.
  const double decorrelation = v == Variant::original ? 0.0 : std::floor(bm.t_corr / m.cfg().dt);
  d.steps_tad_per_exit = steps / static_cast<double>(n) + decorrelation;
  d.steps_direct_per_exit = static_cast<double>(d.direct.steps) / static_cast<double>(n);
  d.ks = ks_distance(d.tad_times, d.direct.times);
  return d;
}

StudyOutput boost_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                        const EnsembleOptions& opt, double min_boost, double ks_tol) {
  const BoostData d = boost_data(Variant::modified, m, label, n, seed, opt);
  const double boost = d.steps_direct_per_exit / d.steps_tad_per_exit;
  std::vector<TestReport> parts{make_report("boost_check", min_boost / boost, 1.0, n),
                                make_report("ks_check", d.ks, ks_tol, n)};
  parts[0].note("boost", boost);
  StudyOutput out;
  out.report = combine("boost", parts);
  out.report.note("boost", boost).note("ks_distance", d.ks).note("seed", static_cast<double>(seed));
  out.csv_name = "boost.csv";
  out.table = kv_table();
  kv(out.table, "steps_direct_per_exit", d.steps_direct_per_exit);
  kv(out.table, "steps_tad_per_exit", d.steps_tad_per_exit);
  kv(out.table, "boost", boost);
  kv(out.table, "ks_distance", d.ks);
  kv(out.table, "mean_direct", d.direct.mean_time());
  kv(out.table, "mean_tad", std::accumulate(d.tad_times.begin(), d.tad_times.end(), 0.0) / static_cast<double>(n));
  return out;
}

StudyOutput original_bias_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                                const EnsembleOptions& opt) {
  const BasinModel& bm = m.basin(label);
  const ExitSample direct = qsd_exits(m.field(), *bm.eig_lo, m.cfg().dt, n, seed, kStreamQsdExits, opt);
  const auto orig = exit_step_ensemble(Variant::original, m, label, n, seed, kStreamExitSteps, {}, opt);
  const auto mod = exit_step_ensemble(Variant::modified, m, label, n, seed, kStreamSecondary, {}, opt);
  StudyOutput out;
  out.report = informational("original_bias", "bias quantification, no pass/fail");
  out.report.n = n;
  const double ko = ks_distance(times_of(orig), direct.times);
  const double km = ks_distance(times_of(mod), direct.times);
  out.report.statistic = ko;
  out.report.note("ks_original", ko).note("ks_modified", km).note("seed", static_cast<double>(seed));
  out.csv_name = "original_bias.csv";
  out.table = kv_table();
  kv(out.table, "ks_original_vs_direct", ko);
  kv(out.table, "ks_modified_vs_direct", km);
  kv(out.table, "fraction_left_original", static_cast<double>(lefts_of(orig)) / static_cast<double>(n));
  kv(out.table, "fraction_left_modified", static_cast<double>(lefts_of(mod)) / static_cast<double>(n));
  kv(out.table, "fraction_left_direct", static_cast<double>(direct.n_left()) / static_cast<double>(n));
  return out;
}

StudyOutput theta_asymptotics_study(const Potential1D& pot, const Basin& basin, double r,
                                    const std::vector<double>& beta_hi_list, std::size_t grid_n, double slope_lo,
                                    double slope_hi) {
  if (!(r > 1.0)) throw ConfigError("theta study needs r > 1");
  if (beta_hi_list.size() < 3) throw ConfigError("theta study needs at least 3 beta_hi values");
  for (std::size_t i = 1; i < beta_hi_list.size(); ++i)
    if (!(beta_hi_list[i] > beta_hi_list[i - 1])) throw ConfigError("theta study needs increasing beta_hi");
  StudyOutput out;
  out.csv_name = "theta.csv";
  out.table = CsvTable({"beta_hi", "beta_lo", "side", "theta_exact", "theta_arrhenius", "gap"});
  std::array<std::vector<double>, 2> lx, lg;
  std::array<bool, 2> monotone{true, true};
  for (double bh : beta_hi_list) {
    const double bl = r * bh;
    const ThetaTable t = theta_table(pot, basin, bh, bl, grid_n);
    for (const auto& row : theta_csv(t).rows) out.table.add(row);
    for (int k = 0; k < 2; ++k) {
      const double g = std::abs(t.side[static_cast<std::size_t>(k)].gap());
      if (!lg[k].empty() && !(std::log(g) < lg[k].back())) monotone[k] = false;
      lx[k].push_back(std::log(1.0 / bh - 1.0 / bl));
      lg[k].push_back(std::log(g));
    }
  }
  const double center = 0.5 * (slope_lo + slope_hi);
  const double half = 0.5 * (slope_hi - slope_lo);
  double worst = 0.0;
  std::array<double, 2> slope{};
  for (int k = 0; k < 2; ++k) {
    slope[k] = fit_line(lx[k], lg[k]).first;
    worst = std::max(worst, std::abs(slope[k] - center));
  }
  out.report = make_report("theta_asymptotics", worst, half, beta_hi_list.size());
  if (!monotone[0] || !monotone[1]) out.report.verdict = Verdict::fail;
  out.report.note("slope_left", slope[0]).note("slope_right", slope[1]).note("r", r);
  out.report.note("monotone", monotone[0] && monotone[1] ? "yes" : "no");
  return out;
}

StudyOutput lambda_decay_study(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                               std::size_t grid_n, double rel_tol) {
  if (beta_list.size() < 4) throw ConfigError("lambda decay study needs at least 4 betas");
  for (std::size_t i = 1; i < beta_list.size(); ++i)
    if (!(beta_list[i] > beta_list[i - 1])) throw ConfigError("lambda decay study needs increasing betas");
  StudyOutput out;
  out.csv_name = "lambda_decay.csv";
  out.table = CsvTable({"beta", "lambda", "log_lambda"});
  const double barrier = basin.min_barrier();
  if (!(barrier > 0.0)) {
    out.report = informational("lambda_decay", "no barrier: the basin is not metastable");
    return out;
  }
  std::vector<double> xs, ys;
  bool truncated = false;
  for (double b : beta_list) {
    try {
      const EigenPair e = solve_principal_eigenpair(pot, basin, b, grid_n);
      xs.push_back(b);
      ys.push_back(std::log(e.lambda));
      out.table.add({csv_num(b), csv_sci(e.lambda), csv_num(ys.back())});
    } catch (const UnderflowError&) {
      truncated = true;
      break;
    }
  }
  if (xs.size() < 2) {
    out.report = informational("lambda_decay", "underflow before two betas were solved");
    return out;
  }
  const double slope = fit_line(xs, ys).first;
  out.report = make_report("lambda_decay", std::abs(slope + barrier) / barrier, rel_tol, xs.size());
  if (!(slope < 0.0)) out.report.verdict = Verdict::fail;
  out.report.note("slope", slope).note("barrier", barrier);
  if (truncated) out.report.note("note", "beta list truncated at solver underflow");
  return out;
}

StudyOutput boundedness_study(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                              double bound, std::size_t grid_n) {
  StudyOutput out;
  out.csv_name = "boundedness.csv";
  out.table = CsvTable({"beta", "max_u"});
  double worst = 0.0;
  for (double b : beta_list) {
    const EigenPair e = solve_principal_eigenpair(pot, basin, b, grid_n);
    const double mu = *std::max_element(e.u.begin(), e.u.end());
    worst = std::max(worst, mu);
    out.table.add({csv_num(b), csv_num(mu)});
  }
  out.report = make_report("u_bounded", worst, bound, beta_list.size());
  return out;
}

StudyOutput proximity_study(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                            std::size_t grid_n) {
  if (beta_list.size() < 2) throw ConfigError("proximity study needs at least 2 betas");
  StudyOutput out;
  out.csv_name = "f_u_proximity.csv";
  out.table = CsvTable({"beta", "max_abs_f_minus_u", "max_abs_df_minus_du"});
  std::vector<Proximity> ps;
  for (double b : beta_list) {
    const EigenPair e = solve_principal_eigenpair(pot, basin, b, grid_n);
    ps.push_back(f_u_proximity(pot, basin, e, Segment::left_of_min));
    out.table.add({csv_num(b), csv_sci(ps.back().max_f_u), csv_sci(ps.back().max_df_du)});
  }
  // Worst ratio of consecutive values; below 1 means strictly decreasing.
  double worst = 0.0;
  for (std::size_t i = 1; i < ps.size(); ++i) {
    worst = std::max(worst, ps[i].max_f_u / ps[i - 1].max_f_u);
    worst = std::max(worst, ps[i].max_df_du / ps[i - 1].max_df_du);
  }
  out.report = make_report("f_u_proximity", worst, 1.0, beta_list.size());
  if (!(worst < 1.0)) out.report.verdict = Verdict::fail;
  return out;
}

CsvTable eigen_table(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                     std::size_t grid_n) {
  CsvTable t({"beta", "lambda", "lambda2", "p_left", "p_right"});
  for (double b : beta_list) {
    const EigenPair e = solve_principal_eigenpair(pot, basin, b, grid_n);
    const ExitStatistics s = exit_statistics(e);
    t.add({csv_num(b), csv_sci(e.lambda), csv_sci(e.lambda2), csv_num(s.p_left), csv_num(s.p_right)});
  }
  return t;
}

CsvTable theta_csv(const ThetaTable& t) {
  CsvTable c({"beta_hi", "beta_lo", "side", "theta_exact", "theta_arrhenius", "gap"});
  for (Side s : {Side::left, Side::right}) {
    const ThetaEntry& e = t[s];
    c.add({csv_num(t.beta_hi), csv_num(t.beta_lo), to_string(s), csv_sci(e.theta_exact), csv_sci(e.theta_arrhenius),
           csv_num(e.gap())});
  }
  return c;
}

CsvTable summary_table(const std::vector<TestReport>& reports) {
  CsvTable t({"name", "statistic", "threshold", "n", "verdict", "metadata"});
  for (const auto& r : reports) {
    std::string meta;
    for (const auto& [k, v] : r.metadata) {
      if (!meta.empty()) meta += ';';
      meta += k + '=' + v;
    }
    std::replace(meta.begin(), meta.end(), ',', ' ');
    t.add({r.name, csv_num(r.statistic), csv_num(r.threshold), csv_int(static_cast<long long>(r.n)),
           to_string(r.verdict), '"' + meta + '"'});
  }
  return t;
}

}  // namespace tadlab
