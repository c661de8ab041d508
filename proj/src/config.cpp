#include "tadlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tadlab/dynamics.hpp"
#include "tadlab/error.hpp"

namespace tadlab {
namespace {

constexpr ConfigKey kKeys[] = {
    {"potential.family", "-", "quartic_well", "quartic_well | tilted_quartic | periodic | polynomial"},
    {"potential.tilt", "energy/length", "0.1", "linear term of tilted_quartic"},
    {"potential.wells", "count", "2", "number of wells of periodic"},
    {"potential.barrier", "energy", "1", "barrier height of periodic"},
    {"potential.coeffs", "energy", "", "polynomial coefficients c0, c1, ... (ascending powers)"},
    {"potential.domain", "length", "family default", "lo, hi of the simulation box"},
    {"potential.scan_n", "points", "20001", "grid used to locate critical points"},
    {"sde.beta", "1/energy", "4", "inverse temperature of single-temperature studies"},
    {"sde.dt", "time", "0 (auto)", "Euler-Maruyama step; 0 picks 1e-3 up to beta 8, halved per +4"},
    {"sde.t_relax", "time", "-1 (auto)", "rejection relaxation time; < 0 means 10/(lambda2 - lambda)"},
    {"sde.max_steps", "steps", "1e10", "per-walker step budget before a timeout"},
    {"qsd.grid_n", "cells", "0 (auto)", "eigen-solver grid; 0 means max(4000, 250 beta)"},
    {"qsd.beta_list", "1/energy", "8", "betas for solve and lambda_decay"},
    {"qsd.ratio_r", "-", "3", "beta_lo / beta_hi in theta_asymptotics"},
    {"qsd.beta_hi_list", "1/energy", "8, 12, 16, 24", "beta_hi values in theta_asymptotics"},
    {"tad.variant", "-", "modified", "direct | kmc | kmc_kramers | original | modified | idealized"},
    {"tad.beta_hi", "1/energy", "2", "high (search) inverse temperature"},
    {"tad.beta_lo", "1/energy", "6", "low (target) inverse temperature"},
    {"tad.t_corr", "time", "-1 (auto)", "decorrelation time; < 0 means 10/gap at beta_lo, per basin"},
    {"tad.nu_min", "1/time", "1", "prefactor lower bound of the original stop rule"},
    {"tad.delta", "-", "0.01", "confidence parameter of the original stop rule"},
    {"tad.e_min", "energy", "0", "barrier lower bound of the modified stop rule"},
    {"tad.t_max", "time", "-1 (auto)", "low-temperature clock budget of a path; < 0 means 10 / smallest exit rate"},
    {"tad.x_init", "length", "basin 0 minimum", "starting position of a path"},
    {"verify.studies", "-", "", "comma list of studies to run"},
    {"verify.n_samples", "count", "10000", "sample size of simulation studies"},
    {"verify.alpha", "-", "0.01", "significance level"},
    {"run.seed", "u64", "1", "master seed"},
    {"run.threads", "count", "0 (all)", "worker threads"},
    {"run.out", "path", "out", "output directory"},
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  s = trim(std::move(s));
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    s = s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config key " + key + " = '" + value + "': expected " + want);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  if (v == "inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    bad(key, raw, "a number");
  }
  if (pos != v.size()) bad(key, raw, "a number");
  return d;
}

std::int64_t to_int(const std::string& key, const std::string& raw) {
  // 1e10 style is accepted as long as it is integral.
  const double d = to_double(key, raw);
  if (d != std::floor(d) || std::abs(d) > 9.0e18) bad(key, raw, "an integer");
  return static_cast<std::int64_t>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, raw, "an unsigned 64-bit integer");
  return out;
}

std::vector<std::string> to_list(const std::string& raw) {
  std::string v = trim(raw);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& s : to_list(raw)) out.push_back(to_double(key, s));
  return out;
}

void apply(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "potential.family") c.potential.family = unquote(v);
  else if (key == "potential.tilt") c.potential.tilt = to_double(key, v);
  else if (key == "potential.wells") c.potential.wells = static_cast<int>(to_int(key, v));
  else if (key == "potential.barrier") c.potential.barrier = to_double(key, v);
  else if (key == "potential.coeffs") c.potential.coeffs = to_doubles(key, v);
  else if (key == "potential.domain") c.potential.domain = to_doubles(key, v);
  else if (key == "potential.scan_n") c.potential.scan_n = static_cast<std::size_t>(to_int(key, v));
  else if (key == "sde.beta") c.beta = to_double(key, v);
  else if (key == "sde.dt") c.dt = to_double(key, v);
  else if (key == "sde.t_relax") c.t_relax = to_double(key, v);
  else if (key == "sde.max_steps") c.max_steps = to_int(key, v);
  else if (key == "qsd.grid_n") c.grid_n = static_cast<std::size_t>(to_int(key, v));
  else if (key == "qsd.beta_list") c.beta_list = to_doubles(key, v);
  else if (key == "qsd.ratio_r") c.ratio_r = to_double(key, v);
  else if (key == "qsd.beta_hi_list") c.beta_hi_list = to_doubles(key, v);
  else if (key == "tad.variant") c.variant = unquote(v);
  else if (key == "tad.beta_hi") c.tad.beta_hi = to_double(key, v);
  else if (key == "tad.beta_lo") c.tad.beta_lo = to_double(key, v);
  else if (key == "tad.t_corr") c.tad.t_corr = to_double(key, v);
  else if (key == "tad.nu_min") c.tad.nu_min = to_double(key, v);
  else if (key == "tad.delta") c.tad.delta = to_double(key, v);
  else if (key == "tad.e_min") c.tad.e_min = to_double(key, v);
  else if (key == "tad.t_max") c.tad.t_max = to_double(key, v);
  else if (key == "tad.x_init") {
    c.x_init = to_double(key, v);
    c.x_init_set = true;
  } else if (key == "verify.studies") c.studies = to_list(v);
  else if (key == "verify.n_samples") c.n_samples = static_cast<std::size_t>(to_int(key, v));
  else if (key == "verify.alpha") c.alpha = to_double(key, v);
  else if (key == "run.seed") c.seed = to_u64(key, v);
  else if (key == "run.threads") c.threads = static_cast<unsigned>(to_int(key, v));
  else if (key == "run.out") c.out = unquote(v);
  else throw ConfigError("unknown config key '" + key + "' (see --help for the list)");
}

}  // namespace

Potential1D PotentialSpec::build() const {
  Potential1D p = [&] {
    if (family == "quartic_well") return quartic_well();
    if (family == "tilted_quartic") return tilted_quartic(tilt);
    if (family == "periodic") return periodic_wells(wells, barrier);
    if (family == "polynomial") {
      if (coeffs.empty()) throw ConfigError("polynomial potential needs potential.coeffs");
      if (domain.size() != 2) throw ConfigError("polynomial potential needs potential.domain = lo, hi");
      return polynomial(coeffs, {domain[0], domain[1]});
    }
    throw ConfigError("unknown potential family '" + family +
                      "' (quartic_well, tilted_quartic, periodic, polynomial)");
  }();
  if (!domain.empty() && family != "polynomial") {
    if (domain.size() != 2) throw ConfigError("potential.domain needs two values");
    p = Potential1D(std::vector<double>(p.coeffs().begin(), p.coeffs().end()), p.cos_amplitude(), p.cos_frequency(), {domain[0], domain[1]}, p.name());
  }
  if (!(p.domain().hi > p.domain().lo)) throw ConfigError("potential.domain must have lo < hi");
  return p;
}

double ExperimentConfig::sde_dt() const { return dt > 0.0 ? dt : default_dt(beta); }
double ExperimentConfig::tad_dt() const { return dt > 0.0 ? dt : default_dt(tad.beta_lo); }

TadConfig ExperimentConfig::tad_config() const {
  TadConfig t = tad;
  t.dt = tad_dt();
  t.t_relax = t_relax;
  t.max_steps = max_steps;
  t.seed = seed;
  return t;
}

unsigned ExperimentConfig::thread_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ExperimentConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("sde.beta must be positive");
  if (dt < 0.0) throw ConfigError("sde.dt must be positive (or 0 for the default)");
  if (max_steps <= 0) throw ConfigError("sde.max_steps must be positive");
  if (grid_n != 0 && grid_n < 200) throw ConfigError("qsd.grid_n must be at least 200");
  for (double b : beta_list)
    if (!(b > 0.0)) throw ConfigError("qsd.beta_list entries must be positive");
  if (!(ratio_r > 1.0)) throw ConfigError("qsd.ratio_r must exceed 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("verify.alpha must lie in (0, 1)");
  if (n_samples == 0) throw ConfigError("verify.n_samples must be positive");
  static const char* variants[] = {"direct", "kmc", "kmc_kramers", "original", "modified", "idealized"};
  if (std::find_if(std::begin(variants), std::end(variants), [&](const char* v) { return variant == v; }) ==
      std::end(variants))
    throw ConfigError("tad.variant '" + variant +
                      "' is not one of direct, kmc, kmc_kramers, original, modified, idealized");
  TadConfig t = tad_config();
  t.t_max = std::max(0.0, t.t_max);
  t.validate();
}

std::span<const ConfigKey> config_keys() { return kKeys; }

std::string config_help() {
  std::ostringstream os;
  os << "Config keys (INI file: [section] then key = value; lists are comma separated):\n";
  for (const auto& k : kKeys) {
    os << "  " << k.key;
    for (std::size_t i = std::char_traits<char>::length(k.key); i < 20; ++i) os << ' ';
    os << " [" << k.unit << "] default " << (*k.def ? k.def : "(empty)") << "\n      " << k.help << '\n';
  }
  return os.str();
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(source + ": key '" + section + "' must sit inside a [section]");
    for (const auto& [name, value] : body) apply(c, section + "." + name, value.get_value<std::string>());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

}  // namespace tadlab
