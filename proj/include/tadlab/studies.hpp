#pragma once

// Verification studies: each runs solver or simulation work and returns a
// TestReport plus the table it was computed from.

#include <cstdint>
#include <string>
#include <vector>

#include "tadlab/csv.hpp"
#include "tadlab/qsd.hpp"
#include "tadlab/sim.hpp"
#include "tadlab/tad.hpp"
#include "tadlab/verify.hpp"

namespace tadlab {

struct StudyOutput {
  TestReport report;
  std::string csv_name;  // empty: no table
  CsvTable table;
};

// --- ensembles ----------------------------------------------------------------

struct ExitSample {
  std::vector<double> times;
  std::vector<Side> sides;
  std::int64_t steps = 0;

  std::size_t n_left() const;
  double mean_time() const;
};

/// n exits at eig.beta, each started from an exact draw of the QSD of eig.
/// Replica i uses Rng(seed, stream_base + i).
ExitSample qsd_exits(const ForceField& f, const EigenPair& eig, double dt, std::size_t n, std::uint64_t seed,
                     std::uint64_t stream_base, const EnsembleOptions& opt,
                     std::int64_t max_steps = 10'000'000'000);

/// n independent exit steps of one variant.  The original variant starts at
/// the basin minimum.
std::vector<ExitStepResult> exit_step_ensemble(Variant v, const TadModel& m, int label, std::size_t n,
                                               std::uint64_t seed, std::uint64_t stream_base,
                                               const ExitStepOptions& so, const EnsembleOptions& opt);

// --- exit law of the SDE ------------------------------------------------------

/// One-sample KS of QSD-started exit times against E(lambda_eig).
StudyOutput exit_law_study(const Potential1D& pot, int label, double beta, double dt, std::size_t n,
                           std::uint64_t seed, const EnsembleOptions& opt, double alpha = kAlpha,
                           std::size_t grid_n = 0);
/// Binomial z-test of the left-exit fraction against the eigen-solver p_left.
StudyOutput exit_side_study(const Potential1D& pot, int label, double beta, double dt, std::size_t n,
                            std::uint64_t seed, const EnsembleOptions& opt, double alpha = kAlpha,
                            std::size_t grid_n = 0);
/// KS between the exit times of left and right exits.
StudyOutput independence_study(const Potential1D& pot, int label, double beta, double dt, std::size_t n,
                               std::uint64_t seed, const EnsembleOptions& opt, double alpha = kAlpha,
                               std::size_t grid_n = 0);

// --- TAD exit steps -------------------------------------------------------------

/// Idealized exit steps against direct QSD-started exits at beta_lo: KS on
/// times at alpha, and side fractions within 2 standard errors.
StudyOutput idealized_exit_step_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                                      const EnsembleOptions& opt, double alpha = kAlpha);

/// Stop-disabled idealized exit steps: per-side first exit times against
/// E(lambda_hi p_i_hi) and their correlation against 3 / sqrt(n).
StudyOutput first_exit_law_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                                 const EnsembleOptions& opt, double alpha = kAlpha);

struct ReplayData {
  std::size_t runs = 0;
  std::size_t matches = 0;
  std::size_t incomplete = 0;  // logs that stopped before the stop time
  std::size_t events = 0;
  std::size_t post_stop_events = 0;
  std::size_t violations = 0;  // modified variant only
};

/// For run i, a stop-enabled exit step and a stop-disabled one with the same
/// stream; the disabled one records until horizon_factor * its stop time.
ReplayData replay_data(Variant v, const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                       const EnsembleOptions& opt, double horizon_factor = 3.0);
StudyOutput replay_study(Variant v, const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                         const EnsembleOptions& opt);
StudyOutput guarantee_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                            const EnsembleOptions& opt);

struct BoostData {
  ExitSample direct;
  std::vector<double> tad_times;
  std::vector<Side> tad_sides;
  double steps_direct_per_exit = 0.0;
  double steps_tad_per_exit = 0.0;  // search + dephasing + decorrelation
  double ks = 0.0;
};
BoostData boost_data(Variant v, const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                     const EnsembleOptions& opt);
/// Modified TAD: force evaluations per low-temperature exit at least
/// min_boost times fewer than direct simulation, and KS distance to the
/// direct exit times at most ks_tol.
StudyOutput boost_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                        const EnsembleOptions& opt, double min_boost = 5.0, double ks_tol = 0.05);

/// Original and modified exit steps against direct exits; informational.
StudyOutput original_bias_study(const TadModel& m, int label, std::size_t n, std::uint64_t seed,
                                const EnsembleOptions& opt);

// --- eigen-only studies ---------------------------------------------------------

/// Gap |Theta/Theta_arrhenius - 1| per side for beta_lo = r beta_hi; pass iff
/// it decreases along the list and the log-log slope against
/// 1/beta_hi - 1/beta_lo lies in [slope_lo, slope_hi].
StudyOutput theta_asymptotics_study(const Potential1D& pot, const Basin& basin, double r,
                                    const std::vector<double>& beta_hi_list, std::size_t grid_n = 0,
                                    double slope_lo = 0.8, double slope_hi = 1.2);

/// Slope of log lambda against beta; pass iff negative and within rel_tol of
/// minus the smallest barrier.  Informational when the basin has no barrier.
StudyOutput lambda_decay_study(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                               std::size_t grid_n = 0, double rel_tol = 0.1);

/// max u over the basin (u(x0) = 1) for each beta; pass iff all <= bound.
StudyOutput boundedness_study(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                              double bound = 1.2, std::size_t grid_n = 0);

/// max|f - u| and max|f' - u'| on the left segment; pass iff both decrease
/// along the (increasing) beta list.
StudyOutput proximity_study(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                            std::size_t grid_n = 0);

/// Rows (beta, lambda, lambda2, p_left, p_right) for each beta.
CsvTable eigen_table(const Potential1D& pot, const Basin& basin, const std::vector<double>& beta_list,
                     std::size_t grid_n = 0);
/// Rows (beta_hi, beta_lo, side, theta_exact, theta_arrhenius, gap).
CsvTable theta_csv(const ThetaTable& t);

/// Machine-readable summary consumed by `report`.
CsvTable summary_table(const std::vector<TestReport>& reports);

}  // namespace tadlab
