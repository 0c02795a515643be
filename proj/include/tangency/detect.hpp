#pragma once

// Tangency classification and the two detectors: Newton on the fold
// parameters, and a bisection sweep over a family of stable leaves.

#include <optional>
#include <string>
#include <vector>

#include "tangency/cocycle.hpp"
#include "tangency/folding.hpp"
#include "tangency/systems.hpp"

namespace tangency {

inline constexpr double kClassifyAngleTol = 1e-6;

struct TangencyClass {
  int c_t = 0;
  int d_t = 0;
  int k_t = 0;

  bool operator==(const TangencyClass&) const = default;
};

struct Classification {
  bool transverse = false;
  TangencyClass triple;
  std::vector<double> angles;
};

/// d_T = #principal angles below angle_tol, k_T = dim TU + dim TS - d,
/// c_T = d_T - k_T. Transverse iff d_T = max(0, k_T).
Classification classify(const Subspace& tu, const Subspace& ts, int ambient_dim,
                        double angle_tol = kClassifyAngleTol);

enum class Detector { kNewton, kSweep };
const char* to_string(Detector d);

struct TangencyReport {
  Detector detector = Detector::kNewton;
  Vec t_star;
  AmbientPoint point;
  Subspace plane;  // stable plane at the point
  TangencyClass triple;
  bool transverse = false;
  std::vector<double> principal_angles;
  double residual_norm = 0.0;
  int iterations = 0;
  /// Sweep only: t-bar, midpoint of the final bisection bracket.
  std::optional<double> leaf_parameter;
};

/// b(E) - A(E) t for E = stable_plane(embed(t)), with A, b the fold's linear
/// system. Zero iff the stable plane lies in the fold's tangent plane.
Vec tangency_residual(const ScenarioSystem& sys, const FoldingManifold& fold, const Vec& t,
                      int pullback_steps = kDefaultPullbackSteps);

struct NewtonOptions {
  int max_iterations = 50;
  int max_halvings = 10;
  double fd_step = 1e-6;
  double tolerance = 1e-9;
  int pullback_steps = kDefaultPullbackSteps;
  double angle_tol = kClassifyAngleTol;
};

/// Damped Newton with a central finite-difference Jacobian. Throws
/// kNoConvergence or kLeftDomain.
TangencyReport find_tangency_newton(const ScenarioSystem& sys, const FoldingManifold& fold,
                                    const Vec& t0, const NewtonOptions& opts = {});

/// Leaves crossing the transversal origin + tau * direction, tau in (-r, r).
/// Coordinates: ambient = origin + scale * rotation * z; the last column of
/// rotation is the transversal direction.
struct LeafFamily {
  AmbientPoint origin;
  Mat rotation;
  double scale = 1.0;
  double half_width = 0.1;
  /// RK4 step (model units) used to trace perturbed leaves.
  double rk4_step = 0.25;
  int pullback_steps = kDefaultPullbackSteps;

  /// Leaves transverse to the fold's chart normal, through its origin.
  static LeafFamily for_fold(const FoldingManifold& fold);
};

/// tau of the leaf through x. Unperturbed systems use the flat leaves of the
/// constant stable plane; otherwise the leaf is traced by integrating the
/// stable-plane field from x to the transversal.
double leaf_coordinate(const ScenarioSystem& sys, const LeafFamily& leaves,
                       const AmbientPoint& x);

struct SweepOptions {
  double bisection_tol = 1e-13;
  int coarse_per_axis = 3;
  double angle_tol = kClassifyAngleTol;
};

/// Bisection for the infimum of the leaf parameters met by the fold patch.
/// Throws kNotElliptic, kEmptyIntersection, kLeftDomain (also when the
/// lowest leaf is only met on the patch boundary).
TangencyReport find_tangency_sweep(const ScenarioSystem& sys, const FoldingManifold& fold,
                                   const LeafFamily& leaves, const SweepOptions& opts = {});

}  // namespace tangency
