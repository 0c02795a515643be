#pragma once

// Induced dynamics on the Grassmann bundle, (x, E) -> (f(x), Df(x) E), and
// pointwise stable planes by pullback power iteration.

#include <cstdint>
#include <random>
#include <vector>

#include "tangency/ambient.hpp"
#include "tangency/systems.hpp"

namespace tangency {

inline constexpr int kDefaultPullbackSteps = 60;
inline constexpr double kDefaultPullbackTol = 1e-10;

struct BundlePoint {
  AmbientPoint point;
  Subspace plane;
};

BundlePoint grassmann_step(const Diffeomorphism& sys, const BundlePoint& b);

struct StableBundleEstimate {
  Subspace plane;
  int iterations = 0;
  /// sin of the largest principal angle between the n-step and (n-1)-step
  /// pullbacks.
  double cauchy_gap = 0.0;
};

/// Pushes x forward `steps` times and pulls `seed` back through the inverse
/// differentials, re-orthonormalising at every step. Throws kNoConvergence
/// when require_convergence is set and cauchy_gap > tol.
StableBundleEstimate stable_plane(const Diffeomorphism& sys, const AmbientPoint& x,
                                  int steps, const Subspace& seed,
                                  double tol = kDefaultPullbackTol,
                                  bool require_convergence = true);

/// Seeded with the system's unperturbed stable plane.
StableBundleEstimate stable_plane(const ScenarioSystem& sys, const AmbientPoint& x,
                                  int steps = kDefaultPullbackSteps,
                                  double tol = kDefaultPullbackTol,
                                  bool require_convergence = true);

/// cauchy_gap of the n-step estimate for n = 1..max_steps (quadratic cost).
std::vector<double> cauchy_gap_history(const Diffeomorphism& sys, const AmbientPoint& x,
                                       int max_steps, const Subspace& seed);

struct ConeCertificate {
  double alpha = 0.0;
  long long samples = 0;
  double max_ratio = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

using PointSampler = AmbientPoint (*)(const Diffeomorphism&, std::mt19937_64&);

/// Uniform point of the system's domain: box coordinates of a ScenarioSystem
/// in [-eps, eps], other line coordinates in [-1, 1], circle ones in [0, 1).
AmbientPoint sample_domain_point(const Diffeomorphism& sys, std::mt19937_64& rng);

/// Uniform plane of the shell 0.5 alpha <= |L| < alpha around the centre.
Subspace sample_cone_shell_plane(const ConeField& cone, std::mt19937_64& rng);

/// For `samples` random (x, E), E in the cone shell at f(x), records the
/// ratio graph_norm(Df(x)^{-1} E) / graph_norm(E). Passes iff max < 1.
ConeCertificate verify_cone_invariance(const Diffeomorphism& sys, const ConeField& cone,
                                       long long samples, std::uint64_t seed);

}  // namespace tangency
