#include "tangency/detect.hpp"

#include <algorithm>
#include <cmath>

#include "tangency/error.hpp"

namespace tangency {

Classification classify(const Subspace& tu, const Subspace& ts, int ambient_dim,
                        double angle_tol) {
  if (tu.ambient_dim() != ambient_dim || ts.ambient_dim() != ambient_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "classify: ambient dimension");
  }
  Classification out;
  out.angles = principal_angles(tu, ts).angles;
  const int d_t = static_cast<int>(
      std::count_if(out.angles.begin(), out.angles.end(),
                    [&](double a) { return a < angle_tol; }));
  const int k_t = tu.dim() + ts.dim() - ambient_dim;
  out.triple = TangencyClass{d_t - k_t, d_t, k_t};
  out.transverse = d_t == std::max(0, k_t);
  return out;
}

const char* to_string(Detector d) { return d == Detector::kNewton ? "newton" : "sweep"; }

namespace {

bool inside_patch(const ScenarioSystem& sys, const FoldingManifold& fold, const Vec& t) {
  if (t.lpNorm<Eigen::Infinity>() > 1.0) return false;
  return sys.in_box(fold.embed(t));
}

TangencyReport make_report(Detector det, const ScenarioSystem& sys,
                           const FoldingManifold& fold, const Vec& t, int steps,
                           double angle_tol) {
  AmbientPoint x = fold.embed(t);
  Subspace plane = stable_plane(sys, x, steps).plane;
  Classification c = classify(fold.tangent_frame(t), plane, sys.dim(), angle_tol);
  return TangencyReport{det, t, std::move(x), std::move(plane), c.triple, c.transverse,
                        std::move(c.angles), 0.0, 0, std::nullopt};
}

}  // namespace

Vec tangency_residual(const ScenarioSystem& sys, const FoldingManifold& fold, const Vec& t,
                      int pullback_steps) {
  if (fold.ambient_dim() != sys.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "fold and system dimensions differ");
  }
  const AmbientPoint x = fold.embed(t);
  const Subspace e = stable_plane(sys, x, pullback_steps).plane;
  return -fold_defect(fold, model_graph_basis(fold, e), t);
}

TangencyReport find_tangency_newton(const ScenarioSystem& sys, const FoldingManifold& fold,
                                    const Vec& t0, const NewtonOptions& opts) {
  const int k = fold.k();
  if (t0.size() != k) throw Error(ErrorCode::kDimensionMismatch, "t0 length");
  if (fold.codim() * fold.s() != k) {
    throw Error(ErrorCode::kInvalidArgument, "tangency system is not square");
  }
  if (!inside_patch(sys, fold, t0)) {
    throw Error(ErrorCode::kLeftDomain, "initial guess outside the fold patch");
  }
  auto residual = [&](const Vec& t) {
    return tangency_residual(sys, fold, t, opts.pullback_steps);
  };
  // Iterate well past the acceptance tolerance; stop once no step helps.
  const double stop = opts.tolerance * 1e-4;
  Vec t = t0;
  Vec r = residual(t);
  int iterations = 0;
  for (; iterations < opts.max_iterations && r.norm() >= stop; ++iterations) {
    Mat jac(r.size(), k);
    for (int i = 0; i < k; ++i) {
      Vec tp = t;
      Vec tm = t;
      tp[i] += opts.fd_step;
      tm[i] -= opts.fd_step;
      jac.col(i) = (residual(tp) - residual(tm)) / (2.0 * opts.fd_step);
    }
    // J approximates d(residual)/dt, so the Newton update is t - J^{-1} r.
    const Vec step = jac.fullPivLu().solve(r);
    bool accepted = false;
    bool left = false;
    double damping = 1.0;
    for (int h = 0; h <= opts.max_halvings; ++h, damping *= 0.5) {
      Vec cand = t - damping * step;
      if (!inside_patch(sys, fold, cand)) {
        left = true;
        continue;
      }
      Vec rc = residual(cand);
      if (rc.norm() < r.norm()) {
        t = std::move(cand);
        r = std::move(rc);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (r.norm() < opts.tolerance) break;
      if (left) throw Error(ErrorCode::kLeftDomain, "Newton iterates leave the fold patch");
      throw Error(ErrorCode::kNoConvergence,
                  "Newton stalled at residual " + std::to_string(r.norm()));
    }
  }
  if (!(r.norm() < opts.tolerance)) {
    throw Error(ErrorCode::kNoConvergence,
                "Newton residual " + std::to_string(r.norm()) + " after " +
                    std::to_string(iterations) + " iterations");
  }
  TangencyReport report =
      make_report(Detector::kNewton, sys, fold, t, opts.pullback_steps, opts.angle_tol);
  report.residual_norm = r.norm();
  report.iterations = iterations;
  return report;
}

// ---------------------------------------------------------------------------

LeafFamily LeafFamily::for_fold(const FoldingManifold& fold) {
  if (fold.codim() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "leaf families need codimension-one leaves");
  }
  // Wide enough for strongly shifted folds, below half a torus period.
  return LeafFamily{fold.chart().origin, fold.chart().rotation, fold.chart().scale, 0.45};
}

double leaf_coordinate(const ScenarioSystem& sys, const LeafFamily& leaves,
                       const AmbientPoint& x) {
  const int d = sys.dim();
  const int s = d - 1;
  const Vec normal = leaves.rotation.col(d - 1);
  if (sys.unperturbed()) {
    // Flat leaves: x + F v = origin + tau n.
    Mat system(d, d);
    system << sys.unperturbed_stable_plane().frame(), -normal;
    const Vec sol = system.partialPivLu().solve(-displacement(leaves.origin, x));
    return sol[d - 1];
  }
  const Vec z0 = leaves.rotation.transpose() * displacement(leaves.origin, x) / leaves.scale;
  const Vec top = z0.head(s);
  // Slope of the stable plane over the first s model axes at model point z.
  auto slope = [&](double r, double zd) {
    Vec z(d);
    z << (1.0 - r) * top, zd;
    const AmbientPoint p = leaves.origin.translated(leaves.scale * (leaves.rotation * z));
    const Mat m =
        leaves.rotation.transpose() * stable_plane(sys, p, leaves.pullback_steps).plane.frame();
    const Mat graph = m.bottomRows(1) * m.topRows(s).inverse();
    return -(graph * top)(0, 0);
  };
  const int steps =
      std::max(1, static_cast<int>(std::ceil(top.norm() / leaves.rk4_step)));
  const double h = 1.0 / steps;
  double zd = z0[d - 1];
  for (int j = 0; j < steps; ++j) {
    const double r = j * h;
    const double k1 = slope(r, zd);
    const double k2 = slope(r + 0.5 * h, zd + 0.5 * h * k1);
    const double k3 = slope(r + 0.5 * h, zd + 0.5 * h * k2);
    const double k4 = slope(r + h, zd + h * k3);
    zd += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return leaves.scale * zd;
}

namespace {

// Fold patch parametrised by its leaf coordinate, with the best (lowest)
// point found so far.
class LeafSearch {
 public:
  LeafSearch(const ScenarioSystem& sys, const FoldingManifold& fold, const LeafFamily& leaves,
             double match_tol)
      : sys_(sys), fold_(fold), leaves_(leaves), match_tol_(match_tol) {}

  double value(const Vec& t) const {
    return leaf_coordinate(sys_, leaves_, fold_.embed(t));
  }

  void offer(const Vec& t, double g) {
    if (!best_t_ || g < best_g_) {
      best_t_ = t;
      best_g_ = g;
    }
  }

  const Vec& best_t() const { return *best_t_; }
  double best_g() const { return best_g_; }

  /// Does the patch meet leaf tau?
  bool meets(double tau) {
    if (tau >= best_g_) return true;  // intermediate values along the patch
    Vec t = *best_t_;
    double g = best_g_;
    constexpr double kFd = 1e-6;
    const int k = fold_.k();
    for (int it = 0; it < 40; ++it) {
      const double res = g - tau;
      if (std::abs(res) <= match_tol_) {
        offer(t, g);
        return true;
      }
      Vec grad(k);
      for (int i = 0; i < k; ++i) {
        Vec tp = t;
        Vec tm = t;
        tp[i] += kFd;
        tm[i] -= kFd;
        if (!inside(tp) || !inside(tm)) return false;
        grad[i] = (value(tp) - value(tm)) / (2.0 * kFd);
      }
      const double gn = grad.squaredNorm();
      if (gn == 0.0) return false;
      const Vec dir = -(res / gn) * grad;
      bool accepted = false;
      double damping = 1.0;
      for (int h = 0; h <= 6; ++h, damping *= 0.5) {
        Vec cand = t + damping * dir;
        if (!inside(cand)) continue;
        const double gc = value(cand);
        if (std::abs(gc - tau) <= 0.5 * std::abs(res)) {
          t = std::move(cand);
          g = gc;
          accepted = true;
          break;
        }
      }
      if (!accepted) return false;
      if (g < best_g_) offer(t, g);
    }
    return false;
  }

 private:
  bool inside(const Vec& t) const { return t.lpNorm<Eigen::Infinity>() <= 1.0; }

  const ScenarioSystem& sys_;
  const FoldingManifold& fold_;
  const LeafFamily& leaves_;
  double match_tol_;
  std::optional<Vec> best_t_;
  double best_g_ = kInfinite;
};

}  // namespace

TangencyReport find_tangency_sweep(const ScenarioSystem& sys, const FoldingManifold& fold,
                                   const LeafFamily& leaves, const SweepOptions& opts) {
  if (fold.kind() != FoldKind::kElliptic || fold.codim() != 1) {
    throw Error(ErrorCode::kNotElliptic, "the sweep detector needs an elliptic c_T = 1 fold");
  }
  if (fold.ambient_dim() != sys.dim() || leaves.origin.dim() != sys.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "sweep dimensions");
  }
  if (opts.coarse_per_axis < 1 || !(opts.bisection_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sweep options");
  }
  const int k = fold.k();
  LeafSearch search(sys, fold, leaves, std::max(1e-15, 1e-3 * opts.bisection_tol));

  long long count = 1;
  for (int i = 0; i < k; ++i) count *= opts.coarse_per_axis;
  for (long long idx = 0; idx < count; ++idx) {
    Vec t(k);
    long long rem = idx;
    for (int i = 0; i < k; ++i) {
      const int j = static_cast<int>(rem % opts.coarse_per_axis);
      rem /= opts.coarse_per_axis;
      t[i] = opts.coarse_per_axis == 1 ? 0.0
                                       : -1.0 + 2.0 * j / (opts.coarse_per_axis - 1);
    }
    search.offer(t, search.value(t));
  }

  const double r = leaves.half_width;
  double lo = -r;
  if (search.meets(lo)) {
    throw Error(ErrorCode::kLeftDomain, "fold patch reaches below the leaf family");
  }
  if (search.best_g() >= r && !search.meets(r)) {
    throw Error(ErrorCode::kEmptyIntersection, "fold patch meets no leaf of the family");
  }
  double hi = std::min(search.best_g(), r);
  int bisections = 0;
  while (hi - lo > opts.bisection_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    if (search.meets(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
    ++bisections;
  }
  if (search.best_t().lpNorm<Eigen::Infinity>() >= 1.0 - 1e-9) {
    throw Error(ErrorCode::kLeftDomain, "lowest leaf is met on the patch boundary");
  }
  TangencyReport report = make_report(Detector::kSweep, sys, fold, search.best_t(),
                                      leaves.pullback_steps, opts.angle_tol);
  report.residual_norm = hi - lo;
  report.iterations = bisections;
  report.leaf_parameter = 0.5 * (lo + hi);
  return report;
}

}  // namespace tangency
