#include "tangency/scenario.hpp"

#include <random>
#include <string>

#include "tangency/error.hpp"

namespace tangency {

Scenario Scenario::with_system(ScenarioSystem sys) const {
  Scenario out = *this;
  out.system = std::move(sys);
  return out;
}

Scenario Scenario::with_fold(FoldingManifold f) const {
  Scenario out = *this;
  out.fold = std::move(f);
  return out;
}

double default_alpha(int c_t) { return c_t == 1 ? 0.1 : 0.05; }

FoldKind default_fold_kind(int c_t) {
  return c_t == 1 ? FoldKind::kElliptic : FoldKind::kCoupled;
}

Chart stable_aligned_chart(const ScenarioSystem& sys, const AmbientPoint& origin,
                           double scale) {
  const Subspace stable = sys.unperturbed_stable_plane();
  Mat rotation(sys.dim(), sys.dim());
  rotation << stable.frame(), stable.complement();
  Chart chart{origin, rotation, scale};
  chart.validate();
  return chart;
}

double min_singular_value_near(const ScenarioSystem& sys, const AmbientPoint& x,
                               double radius) {
  const ScenarioSystem base = sys.with_perturbations({});
  std::mt19937_64 rng(0x5a11ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double low = kInfinite;
  for (int i = 0; i < 33; ++i) {
    Vec offset = Vec::Zero(sys.dim());
    if (i > 0) {
      for (int j = 0; j < sys.dim(); ++j) offset[j] = gauss(rng);
      offset *= radius / offset.norm();
    }
    AmbientPoint p = x.translated(offset);
    Eigen::JacobiSVD<Mat> svd(base.differential(p));
    low = std::min(low, svd.singularValues()(sys.dim() - 1));
  }
  return low;
}

Scenario build_scenario(int c_t, int s, std::optional<FoldKind> kind,
                        std::optional<double> alpha, std::uint64_t seed) {
  if (c_t < 1) throw Error(ErrorCode::kInvalidArgument, "c_T must be >= 1");
  if (s < 1) throw Error(ErrorCode::kInvalidArgument, "s must be >= 1");
  if (c_t >= 2 && s <= c_t) {
    throw Error(ErrorCode::kInvalidArgument,
                "c_T >= 2 requires s > c_T (got c_T=" + std::to_string(c_t) +
                    ", s=" + std::to_string(s) + ")");
  }
  const FoldKind fold_kind = kind.value_or(default_fold_kind(c_t));
  if (c_t >= 2 && (fold_kind == FoldKind::kElliptic || fold_kind == FoldKind::kSaddle)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(to_string(fold_kind)) + " folds need c_T = 1");
  }
  const double aperture = alpha.value_or(default_alpha(c_t));
  if (!(aperture > 0.0 && aperture < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }

  const int d = c_t == 1 ? s + 1 : c_t * (s + 1);
  const int n = d - s + 1;
  const int m = d - n;

  Vec torus_origin(n);
  std::optional<DASurgery> surgery;
  ToralAutomorphism automorphism = find_codim_one_automorphism(n);
  if (c_t == 1) {
    const double stable_eigen = automorphism.stable_rate();
    surgery = DASurgery{Vec::Zero(2), 0.15,
                        DASurgery::strength_for_multiplier(stable_eigen, kDefaultDAMultiplier)};
    // Well away from the surgery disc around the fixed point.
    torus_origin << 0.37, 0.61;
  } else {
    torus_origin.setConstant(0.5);
  }
  ScenarioSystem system(Vec::Constant(m, kDefaultContraction),
                        BaseMap(std::move(automorphism), std::move(surgery)),
                        kDefaultEpsilon);

  Vec origin_coords(d);
  origin_coords << Vec::Zero(m), torus_origin;
  const AmbientPoint origin = system.point(origin_coords);
  const int codim = fold_kind == FoldKind::kElliptic || fold_kind == FoldKind::kSaddle ? 1 : c_t;
  if (fold_kind == FoldKind::kMixed || fold_kind == FoldKind::kCoupled) {
    if (codim * s + codim != d) {
      throw Error(ErrorCode::kInvalidArgument, "fold dimension does not fit the ambient");
    }
  }
  FoldingManifold fold(fold_kind, s, codim,
                       stable_aligned_chart(system, origin, kDefaultChartScale));
  const double cap = 0.1 * min_singular_value_near(system, origin, 0.2);
  return Scenario{c_t, s, std::move(system), std::move(fold), aperture, seed, cap};
}

}  // namespace tangency
