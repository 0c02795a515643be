#include "tangency/cocycle.hpp"

#include <cmath>
#include <string>

#include "tangency/error.hpp"

namespace tangency {

namespace {

// Orthonormal frame with positive-diagonal QR convention; no rank check.
Mat orthonormal_frame(const Mat& raw) {
  Eigen::HouseholderQR<Mat> qr(raw);
  Mat q = qr.householderQ() * Mat::Identity(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

double largest_sine(const Mat& a, const Mat& b) {
  // Both frames orthonormal with equal dimension.
  Eigen::JacobiSVD<Mat> svd(b - a * (a.transpose() * b));
  return std::min(1.0, svd.singularValues()(0));
}

}  // namespace

BundlePoint grassmann_step(const Diffeomorphism& sys, const BundlePoint& b) {
  if (b.plane.ambient_dim() != sys.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "bundle plane dimension");
  }
  Mat image = sys.differential(b.point) * b.plane.frame();
  return BundlePoint{sys.apply(b.point), Subspace::orthonormalize(image)};
}

StableBundleEstimate stable_plane(const Diffeomorphism& sys, const AmbientPoint& x,
                                  int steps, const Subspace& seed, double tol,
                                  bool require_convergence) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "pullback steps must be >= 1");
  if (seed.ambient_dim() != sys.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "seed plane dimension");
  }
  std::vector<Eigen::PartialPivLU<Mat>> lus;
  lus.reserve(static_cast<std::size_t>(steps));
  AmbientPoint p = x;
  for (int j = 0; j < steps; ++j) {
    lus.emplace_back(sys.differential(p));
    if (j + 1 < steps) p = sys.apply(p);
  }
  // Chain A starts at x_n, chain B at x_{n-1}; both end at x_0. They share
  // the solves once both are running.
  const auto s = seed.dim();
  Mat a = seed.frame();
  Mat b = seed.frame();
  a = orthonormal_frame(lus.back().solve(a));
  Mat both(sys.dim(), 2 * s);
  for (int j = steps - 2; j >= 0; --j) {
    both << a, b;
    const Mat solved = lus[static_cast<std::size_t>(j)].solve(both);
    a = orthonormal_frame(solved.leftCols(s));
    b = orthonormal_frame(solved.rightCols(s));
  }
  StableBundleEstimate est{Subspace::orthonormalize(a), steps, largest_sine(a, b)};
  if (require_convergence && !(est.cauchy_gap <= tol)) {
    throw Error(ErrorCode::kNoConvergence,
                "stable plane cauchy gap " + std::to_string(est.cauchy_gap));
  }
  return est;
}

StableBundleEstimate stable_plane(const ScenarioSystem& sys, const AmbientPoint& x,
                                  int steps, double tol, bool require_convergence) {
  return stable_plane(static_cast<const Diffeomorphism&>(sys), x, steps,
                      sys.unperturbed_stable_plane(), tol, require_convergence);
}

std::vector<double> cauchy_gap_history(const Diffeomorphism& sys, const AmbientPoint& x,
                                       int max_steps, const Subspace& seed) {
  std::vector<Mat> dfs;
  AmbientPoint p = x;
  for (int j = 0; j < max_steps; ++j) {
    dfs.push_back(sys.differential(p));
    p = sys.apply(p);
  }
  auto pullback = [&](int n) {
    Mat e = seed.frame();
    for (int j = n - 1; j >= 0; --j) {
      e = orthonormal_frame(dfs[static_cast<std::size_t>(j)].partialPivLu().solve(e));
    }
    return e;
  };
  std::vector<double> gaps;
  Mat prev = pullback(0);
  for (int n = 1; n <= max_steps; ++n) {
    Mat cur = pullback(n);
    gaps.push_back(largest_sine(cur, prev));
    prev = cur;
  }
  return gaps;
}

AmbientPoint sample_domain_point(const Diffeomorphism& sys, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto mask = sys.periodic_mask();
  double half_width = 1.0;
  if (const auto* sc = dynamic_cast<const ScenarioSystem*>(&sys)) {
    half_width = sc->epsilon();
  }
  Vec c(sys.dim());
  for (int i = 0; i < sys.dim(); ++i) {
    c[i] = mask[static_cast<std::size_t>(i)] ? unit(rng) : half_width * (2.0 * unit(rng) - 1.0);
  }
  return sys.point(c);
}

Subspace sample_cone_shell_plane(const ConeField& cone, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto rows = cone.normal().cols();
  const auto cols = cone.center().dim();
  Mat l(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) l(i, j) = gauss(rng);
  }
  Eigen::JacobiSVD<Mat> svd(l);
  const double norm = (0.5 + 0.5 * unit(rng)) * cone.alpha();
  return cone.plane_from_graph(l * (norm / svd.singularValues()(0)));
}

ConeCertificate verify_cone_invariance(const Diffeomorphism& sys, const ConeField& cone,
                                       long long samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::kInvalidArgument, "samples must be >= 1");
  if (cone.center().ambient_dim() != sys.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "cone dimension");
  }
  ConeCertificate cert;
  cert.alpha = cone.alpha();
  cert.samples = samples;
  cert.seed = seed;
  std::mt19937_64 rng(seed);
  for (long long n = 0; n < samples; ++n) {
    const AmbientPoint x = sample_domain_point(sys, rng);
    const Subspace e = sample_cone_shell_plane(cone, rng);
    const double before = graph_norm(e, cone);
    const Mat pulled = sys.differential(x).partialPivLu().solve(e.frame());
    const double after = graph_norm(Subspace::orthonormalize(pulled), cone);
    cert.max_ratio = std::max(cert.max_ratio, after / before);
  }
  cert.pass = cert.max_ratio < 1.0;
  return cert;
}

}  // namespace tangency
