#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "tadlab/csv.hpp"
#include "tadlab/error.hpp"
#include "tadlab/qsd.hpp"
#include "tadlab/studies.hpp"
#include "tadlab/tad.hpp"

namespace tadlab::cli {
namespace {

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out) / name).string();
}

EnsembleOptions ensemble(const ExperimentConfig& cfg) {
  EnsembleOptions o;
  o.threads = cfg.thread_count();
  return o;
}

std::string side_cell(double v) { return std::isnan(v) ? "" : csv_num(v); }

// Auto budget: long enough for about ten exits from the slowest basin.
double auto_t_max(const Potential1D& pot, const BasinTopology& top, double beta_lo, std::size_t grid_n) {
  double slowest = 0.0;
  for (const Basin& b : top.basins())
    slowest = std::max(slowest, 1.0 / solve_principal_eigenpair(pot, b, beta_lo, grid_n).lambda);
  return 10.0 * slowest;
}

CsvTable path_table(const MetastablePath& p) {
  CsvTable t({"segment_index", "basin_label", "duration", "exit_side"});
  for (std::size_t i = 0; i < p.segments.size(); ++i) {
    const auto& s = p.segments[i];
    t.add({csv_int(static_cast<long long>(i)), csv_int(s.basin), csv_num(s.duration), exit_side_label(s)});
  }
  return t;
}

CsvTable events_table(const std::vector<ExitStepResult>& steps) {
  CsvTable t({"exit_step", "attempt_index", "side", "t_sim", "t_hi", "t_lo", "t_stop_after"});
  for (std::size_t k = 0; k < steps.size(); ++k)
    for (const auto& e : steps[k].events)
      t.add({csv_int(static_cast<long long>(k)), csv_int(e.attempt_index), to_string(e.side), csv_num(e.t_sim),
             side_cell(e.t_hi), side_cell(e.t_lo), csv_num(e.t_stop_after)});
  return t;
}

std::size_t transitions(const MetastablePath& p) {
  return static_cast<std::size_t>(std::count_if(p.segments.begin(), p.segments.end(),
                                                [](const PathSegment& s) { return s.end != SegmentEnd::none; }));
}

using StudyFn = std::function<StudyOutput()>;

struct StudyContext {
  const ExperimentConfig& cfg;
  Potential1D pot;
  BasinTopology top;
  std::unique_ptr<TadModel> model;

  explicit StudyContext(const ExperimentConfig& c)
      : cfg(c), pot(c.potential.build()), top(analyze(pot, c.potential.scan_n)) {}

  const TadModel& tad() {
    if (!model) {
      TadConfig t = cfg.tad_config();
      t.t_max = std::max(0.0, t.t_max);
      model = std::make_unique<TadModel>(pot, t, cfg.grid_n);
    }
    return *model;
  }
};

std::map<std::string, std::function<StudyOutput(StudyContext&)>> registry() {
  using C = StudyContext;
  std::map<std::string, std::function<StudyOutput(C&)>> r;
  r["symmetric_identity"] = [](C& c) {
    Rng rng(c.cfg.seed, 1);
    return StudyOutput{symmetric_identity_study(100, 7, rng), "", {}};
  };
  r["min_exponential"] = [](C& c) {
    Rng rng(c.cfg.seed, 2);
    const double rates[] = {2.0, 1.0};
    return StudyOutput{min_exponential_properties(rates, c.cfg.n_samples, rng, c.cfg.alpha), "", {}};
  };
  r["geometric_sum"] = [](C& c) {
    Rng rng(c.cfg.seed, 3);
    const double probs[] = {0.5, 0.5};
    return StudyOutput{geometric_sum_law_test(1.0, probs, c.cfg.n_samples, rng, c.cfg.alpha), "", {}};
  };
  r["exit_law"] = [](C& c) {
    return exit_law_study(c.pot, 0, c.cfg.beta, c.cfg.sde_dt(), c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg),
                          c.cfg.alpha, c.cfg.grid_n);
  };
  r["exit_side"] = [](C& c) {
    return exit_side_study(c.pot, 0, c.cfg.beta, c.cfg.sde_dt(), c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg),
                           c.cfg.alpha, c.cfg.grid_n);
  };
  r["independence"] = [](C& c) {
    return independence_study(c.pot, 0, c.cfg.beta, c.cfg.sde_dt(), c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg),
                              c.cfg.alpha, c.cfg.grid_n);
  };
  r["idealized_exit_step"] = [](C& c) {
    return idealized_exit_step_study(c.tad(), 0, c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg), c.cfg.alpha);
  };
  r["first_exit_laws"] = [](C& c) {
    return first_exit_law_study(c.tad(), 0, c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg), c.cfg.alpha);
  };
  r["replay"] = [](C& c) {
    const Variant v = c.cfg.variant == "original" || c.cfg.variant == "idealized" ? parse_variant(c.cfg.variant)
                                                                                  : Variant::modified;
    return replay_study(v, c.tad(), 0, c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg));
  };
  r["guarantee"] = [](C& c) { return guarantee_study(c.tad(), 0, c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg)); };
  r["boost"] = [](C& c) { return boost_study(c.tad(), 0, c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg)); };
  r["original_bias"] = [](C& c) {
    return original_bias_study(c.tad(), 0, c.cfg.n_samples, c.cfg.seed, ensemble(c.cfg));
  };
  r["theta_asymptotics"] = [](C& c) {
    return theta_asymptotics_study(c.pot, c.top.basin(0), c.cfg.ratio_r, c.cfg.beta_hi_list, c.cfg.grid_n);
  };
  r["lambda_decay"] = [](C& c) {
    return lambda_decay_study(c.pot, c.top.basin(0), c.cfg.beta_list, c.cfg.grid_n);
  };
  r["boundedness"] = [](C& c) {
    return boundedness_study(c.pot, c.top.basin(0), c.cfg.beta_list, 1.2, c.cfg.grid_n);
  };
  r["f_u_proximity"] = [](C& c) { return proximity_study(c.pot, c.top.basin(0), c.cfg.beta_list, c.cfg.grid_n); };
  return r;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

std::vector<std::string> study_names() {
  std::vector<std::string> n;
  for (const auto& [k, v] : registry()) n.push_back(k);
  return n;
}

int cmd_solve(const ExperimentConfig& cfg, std::ostream& out) {
  const Potential1D pot = cfg.potential.build();
  const BasinTopology top = analyze(pot, cfg.potential.scan_n);
  if (cfg.beta_list.empty()) throw ConfigError("solve needs a non-empty qsd.beta_list");
  CsvTable eig({"basin", "beta", "lambda", "lambda2", "p_left", "p_right"});
  CsvTable theta({"basin", "beta_hi", "beta_lo", "side", "theta_exact", "theta_arrhenius", "gap"});
  for (const Basin& b : top.basins()) {
    for (const auto& row : eigen_table(pot, b, cfg.beta_list, cfg.grid_n).rows) {
      std::vector<std::string> r{csv_int(b.label)};
      r.insert(r.end(), row.begin(), row.end());
      eig.add(r);
      out << "basin " << b.label << " beta " << row[0] << ": lambda " << row[1] << ", p_left " << row[3] << '\n';
    }
    for (const auto& row : theta_csv(theta_table(pot, b, cfg.tad.beta_hi, cfg.tad.beta_lo, cfg.grid_n)).rows) {
      std::vector<std::string> r{csv_int(b.label)};
      r.insert(r.end(), row.begin(), row.end());
      theta.add(r);
    }
  }
  write_csv(out_path(cfg, "eigen.csv"), eig);
  write_csv(out_path(cfg, "theta.csv"), theta);
  out << "wrote " << out_path(cfg, "eigen.csv") << " and " << out_path(cfg, "theta.csv") << '\n';
  return kOk;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  const Potential1D pot = cfg.potential.build();
  const BasinTopology top = analyze(pot, cfg.potential.scan_n);
  TadConfig tc = cfg.tad_config();
  if (tc.t_max < 0.0) tc.t_max = auto_t_max(pot, top, tc.beta_lo, cfg.grid_n);
  const double x_init = cfg.x_init_set ? cfg.x_init : top.basin(0).x0;
  const int start = assign_basin(top, x_init);
  Rng rng(cfg.seed, 0);

  MetastablePath path;
  std::vector<ExitStepResult> steps;
  double boost = std::nan("");
  if (cfg.variant == "direct") {
    path = run_direct(pot, top, tc.beta_lo, x_init, tc.t_max, tc.dt, rng, tc.max_steps);
  } else if (cfg.variant == "kmc") {
    const TadModel m(pot, tc, cfg.grid_n);
    path = run_kmc(top, exact_rates(m), tc.t_max, rng, start);
  } else if (cfg.variant == "kmc_kramers") {
    path = run_kmc(top, kramers_rates(top, tc.beta_lo), tc.t_max, rng, start);
  } else {
    const TadModel m(pot, tc, cfg.grid_n);
    TadRun run = run_tad(parse_variant(cfg.variant), m, x_init, rng);
    boost = run.boost();
    path = std::move(run.path);
    steps = std::move(run.exit_steps);
  }
  path.check(top);

  write_csv(out_path(cfg, "path.csv"), path_table(path));
  write_csv(out_path(cfg, "events.csv"), events_table(steps));
  CsvTable summary({"quantity", "value"});
  summary.add({"variant", cfg.variant});
  summary.add({"t_max", csv_num(tc.t_max)});
  summary.add({"total_time", csv_num(path.total_time())});
  summary.add({"segments", csv_int(static_cast<long long>(path.segments.size()))});
  summary.add({"transitions", csv_int(static_cast<long long>(transitions(path)))});
  summary.add({"sde_steps", csv_int(path.steps)});
  summary.add({"boost", std::isnan(boost) ? "" : csv_num(boost)});
  summary.add({"truncated", path.truncated ? "1" : "0"});
  write_csv(out_path(cfg, "run_summary.csv"), summary);

  out << cfg.variant << ": " << path.segments.size() << " segments, " << transitions(path)
      << " transitions, low-temperature time " << path.total_time() << '\n';
  if (!std::isnan(boost)) out << "boost factor " << boost << '\n';
  if (path.truncated) {
    std::cerr << "tadlab: a walker hit sde.max_steps; the path is partial (truncated = 1)\n";
    return kTimeout;
  }
  return kOk;
}

int cmd_verify(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.studies.empty()) throw ConfigError("verify.studies is empty; valid studies: " + [] {
    std::string s;
    for (const auto& n : study_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());
  const auto reg = registry();
  for (const auto& name : cfg.studies) {
    if (!reg.count(name)) {
      std::string s;
      for (const auto& n : study_names()) s += (s.empty() ? "" : ", ") + n;
      throw ConfigError("unknown study '" + name + "'; valid studies: " + s);
    }
  }
  StudyContext ctx(cfg);
  std::vector<TestReport> reports;
  bool ok = true;
  for (const auto& name : cfg.studies) {
    StudyOutput so = reg.at(name)(ctx);
    so.report.name = name;
    if (!so.csv_name.empty()) write_csv(out_path(cfg, so.csv_name), so.table);
    ok = ok && so.report.passed();
    out << std::left << std::setw(14) << to_string(so.report.verdict) << std::setw(22) << name << " statistic "
        << so.report.statistic << " threshold " << so.report.threshold << '\n';
    reports.push_back(std::move(so.report));
  }
  write_csv(out_path(cfg, "summary.csv"), summary_table(reports));
  return ok ? kOk : kFailed;
}

int cmd_report(const ExperimentConfig& cfg, std::ostream& out) {
  const std::string path = out_path(cfg, "summary.csv");
  std::ifstream in(path);
  if (!in) throw ConfigError("no summary at " + path + "; run `tadlab verify` first");
  std::string line;
  std::getline(in, line);
  std::size_t n = 0, failed = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() < 5) throw ConfigError("malformed summary line: " + line);
    ++n;
    if (c[4] == "fail") ++failed;
    out << std::left << std::setw(14) << c[4] << std::setw(22) << c[0] << " statistic " << c[1] << " threshold "
        << c[2] << " n " << c[3] << '\n';
    if (c.size() > 5 && !c[5].empty()) out << "    " << c[5] << '\n';
  }
  out << n << " studies, " << failed << " failed\n";
  return failed == 0 ? kOk : kFailed;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const TimeoutError& e) {
    std::cerr << "tadlab: timeout: " << e.what() << '\n';
    return kTimeout;
  } catch (const ConfigError& e) {
    std::cerr << "tadlab: invalid configuration: " << e.what() << '\n';
  } catch (const Error& e) {
    std::cerr << "tadlab: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "tadlab: internal error: " << e.what() << '\n';
  }
  return kInvalid;
}

}  // namespace tadlab::cli
