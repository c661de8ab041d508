#pragma once

// Experiment configuration: an INI file with [sections] and key = value
// lines.  Lists are comma separated.  Every key is listed in config_keys()
// with its unit and default; unknown keys are rejected.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tadlab/potential.hpp"
#include "tadlab/tad.hpp"

namespace tadlab {

struct PotentialSpec {
  std::string family = "quartic_well";  // quartic_well, tilted_quartic, periodic, polynomial
  double tilt = 0.1;
  int wells = 2;
  double barrier = 1.0;
  std::vector<double> coeffs;  // ascending powers
  std::vector<double> domain;  // empty: family default
  std::size_t scan_n = 20001;

  Potential1D build() const;
};

struct ExperimentConfig {
  PotentialSpec potential;

  double beta = 4.0;
  double dt = 0.0;  // 0: default_dt of the relevant beta
  double t_relax = -1.0;
  std::int64_t max_steps = 10'000'000'000;

  std::size_t grid_n = 0;
  std::vector<double> beta_list{8.0};
  double ratio_r = 3.0;
  std::vector<double> beta_hi_list{8.0, 12.0, 16.0, 24.0};

  std::string variant = "modified";  // direct, kmc, kmc_kramers, original, modified, idealized
  // dt, seed and max_steps are filled from the other sections.  t_max < 0
  // means auto: 10 / (smallest low-temperature exit rate).
  TadConfig tad = [] {
    TadConfig t;
    t.t_max = -1.0;
    return t;
  }();
  double x_init = 0.0;
  bool x_init_set = false;

  std::vector<std::string> studies;
  std::size_t n_samples = 10000;
  double alpha = 0.01;

  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: all hardware threads
  std::string out = "out";

  double sde_dt() const;  // dt, or default_dt(beta)
  double tad_dt() const;  // dt, or default_dt(beta_lo)
  TadConfig tad_config() const;
  unsigned thread_count() const;
  /// Beta ordering and value ranges; topology-dependent checks (e_min
  /// against the barriers) happen when the model is built.
  void validate() const;
};

struct ConfigKey {
  const char* key;  // section.name
  const char* unit;
  const char* def;
  const char* help;
};
std::span<const ConfigKey> config_keys();
std::string config_help();

ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

}  // namespace tadlab
