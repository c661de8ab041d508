#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "commands.hpp"
#include "tadlab/kernel.hpp"

int main(int argc, char** argv) {
  using namespace tadlab;
  CLI::App app{"tadlab: temperature accelerated dynamics laboratory for 1D overdamped Langevin dynamics"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.footer("\n" + config_help() +
             "\nExit codes: 0 success, 1 a verification failed, 2 invalid input or solver failure, 3 timeout.");

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "experiment config (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides run.out)");
  app.add_option("--seed", seed, "master seed (overrides run.seed)");
  app.add_option("--threads", threads, "worker threads, 0 = all (overrides run.threads)");

  auto* solve = app.add_subcommand("solve", "eigen-solve every basin: eigen.csv and theta.csv");
  auto* run = app.add_subcommand("run", "simulate a metastable path: path.csv, events.csv, run_summary.csv");
  auto* verify = app.add_subcommand("verify", "run the configured studies: one CSV each plus summary.csv");
  auto* report = app.add_subcommand("report", "print summary.csv from the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kInvalid;
  }

  return cli::guarded([&] {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (out_dir) cfg.out = *out_dir;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    std::clog << "tadlab: kernel backend " << to_string(active_backend()) << ", " << cfg.thread_count()
              << " thread(s)\n";
    if (solve->parsed()) return cli::cmd_solve(cfg, std::cout);
    if (run->parsed()) return cli::cmd_run(cfg, std::cout);
    if (verify->parsed()) return cli::cmd_verify(cfg, std::cout);
    if (report->parsed()) return cli::cmd_report(cfg, std::cout);
    return static_cast<int>(cli::kInvalid);
  });
}
