#pragma once

// Seeded perturbation experiments: random bumps of controlled C1 size on the
// system, or random low-order terms on the fold, followed by re-detection.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tangency/detect.hpp"
#include "tangency/scenario.hpp"

namespace tangency {

/// Strictly decreasing positive magnitudes; a single trailing 0 is allowed.
struct MagnitudeLadder {
  std::vector<double> magnitudes;

  static MagnitudeLadder defaults();
  /// Parses "1e-2,3e-3,...". Throws kInvalidArgument.
  static MagnitudeLadder parse(const std::string& comma_list);
  void validate() const;
};

enum class BumpMode { kOverlap, kRemote };
const char* to_string(BumpMode m);

inline constexpr double kDefaultBumpRadius = 0.1;

/// Overlap: centre within half a radius of the fold's chart centre. Remote:
/// centre at least two radii from it (and clear of any surgery disc).
/// The magnitude is capped at the scenario's max_perturbation.
BumpPerturbation random_perturbation(const Scenario& sc, BumpMode mode, double magnitude,
                                     std::uint64_t seed,
                                     double radius = kDefaultBumpRadius);

/// Random constant, linear and quadratic terms rescaled so that
/// FoldPerturbation::c1_size equals magnitude.
FoldPerturbation random_fold_perturbation(int k, int codim, double magnitude,
                                          std::uint64_t seed);

/// Per-trial seed derived from the run seed, ladder index and trial index.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t magnitude_index, int trial);

enum class ExperimentTarget { kSystem, kFold };
const char* to_string(ExperimentTarget t);

struct TrialRecord {
  double magnitude = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  Detector detector = Detector::kNewton;
  BumpMode mode = BumpMode::kOverlap;
  bool success = false;
  double residual = 0.0;      // NaN on failure
  double displacement = 0.0;  // NaN on failure
  std::optional<bool> agreement;
  std::optional<bool> certificate_pass;  // fold experiments only
  std::string error;
};

struct PersistenceStats {
  double magnitude = 0.0;
  int trials = 0;
  int successes = 0;
  double max_residual = 0.0;
  std::vector<double> displacement;  // Newton, successful trials in trial order
  double displacement_slope = 0.0;
  int sweep_trials = 0;
  int sweep_successes = 0;
  int agreements = 0;
  int certificate_failures = 0;
  double success_rate() const { return trials == 0 ? 0.0 : double(successes) / trials; }
};

struct RobustnessOptions {
  /// 0: TANGENCY_THREADS, else hardware concurrency.
  int threads = 0;
  /// Run the sweep detector too (only used for elliptic c_T = 1 scenarios).
  bool sweep = true;
  double bump_radius = kDefaultBumpRadius;
  /// Grid for the per-trial folding certificate of fold experiments.
  int certificate_grid = 5;
};

struct RobustnessResult {
  ExperimentTarget target = ExperimentTarget::kSystem;
  std::uint64_t seed = 0;
  int trials = 0;
  MagnitudeLadder ladder;
  Vec baseline_t;
  std::vector<PersistenceStats> stats;
  std::vector<TrialRecord> records;
  /// Least-squares slope through the origin of Newton displacement against
  /// magnitude, all successful trials.
  double displacement_slope = 0.0;
  bool monotone_success = true;
  /// Successful trials above 3 * slope * magnitude.
  int envelope_violations = 0;
  std::vector<std::string> violations;
  // Fold experiments: smallest magnitude with a certificate / detector failure.
  std::optional<double> first_certificate_failure;
  std::optional<double> first_detector_failure;
  bool certificate_precedes_detector = true;
};

int resolve_thread_count(int requested);

/// Random bumps on the system; Newton from the unperturbed t*, plus the sweep
/// for elliptic c_T = 1 scenarios. Detector errors are recorded, not thrown.
/// Throws only if the unperturbed tangency is not found.
RobustnessResult persistence_experiment(const Scenario& sc, const MagnitudeLadder& ladder,
                                        int trials, std::uint64_t seed,
                                        const RobustnessOptions& opts = {});

/// Same, perturbing the fold instead of the system and certifying each
/// perturbed fold first.
RobustnessResult fold_perturbation_experiment(const Scenario& sc,
                                              const MagnitudeLadder& ladder, int trials,
                                              std::uint64_t seed,
                                              const RobustnessOptions& opts = {});

/// One row per trial per detector; floats as %.17g, "nan" when absent.
std::string stats_csv(const RobustnessResult& r);

}  // namespace tangency
