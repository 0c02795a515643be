#pragma once

// Built scenarios: a skew-product system plus a folding patch placed so that
// its centre tangent plane contains the stable plane at the chart centre.

#include <cstdint>
#include <optional>

#include "tangency/folding.hpp"
#include "tangency/systems.hpp"

namespace tangency {

inline constexpr double kDefaultEpsilon = 1.0;
inline constexpr double kDefaultContraction = 0.5;
inline constexpr double kDefaultChartScale = 0.1;
inline constexpr double kDefaultDAMultiplier = 1.5;

struct Scenario {
  int c_t = 1;
  int s = 1;
  ScenarioSystem system;
  FoldingManifold fold;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  /// Largest C1 size allowed for a bump: 0.1 x the smallest singular value of
  /// the unperturbed differential near the chart.
  double max_perturbation = 0.0;

  int d() const { return system.dim(); }
  int n() const { return system.torus_dims(); }
  int k() const { return fold.k(); }
  ConeField cone() const { return fold.cone(alpha); }
  Scenario with_system(ScenarioSystem sys) const;
  Scenario with_fold(FoldingManifold f) const;
};

/// Default aperture: 0.1 for c_T = 1, 0.05 otherwise.
double default_alpha(int c_t);
/// elliptic for c_T = 1, coupled otherwise.
FoldKind default_fold_kind(int c_t);

/// c_T = 1: d = s + 1, DA base on T^2. c_T >= 2 (requires s > c_T):
/// d = c_T (s + 1), linear base on T^n with n = d - s + 1 and one stable
/// eigenvalue. Throws kInvalidArgument / kNoSuchAutomorphism.
Scenario build_scenario(int c_t, int s, std::optional<FoldKind> kind = std::nullopt,
                        std::optional<double> alpha = std::nullopt,
                        std::uint64_t seed = 0);

/// Chart whose first s columns span the system's unperturbed stable plane,
/// centred at `origin`; the remaining columns complete an orthonormal basis.
Chart stable_aligned_chart(const ScenarioSystem& sys, const AmbientPoint& origin,
                           double scale);

/// min over a few points around `x` of the smallest singular value of the
/// unperturbed differential.
double min_singular_value_near(const ScenarioSystem& sys, const AmbientPoint& x,
                               double radius);

}  // namespace tangency
