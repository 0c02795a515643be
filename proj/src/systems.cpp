#include "tangency/systems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tangency/error.hpp"

namespace tangency {

namespace {

constexpr int kMaxNewtonSteps = 50;

long long integer_determinant(const IntMatrix& m) {
  // Fraction-free Bareiss elimination.
  const std::size_t n = m.size();
  IntMatrix a = m;
  long long sign = 1;
  long long prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      std::size_t swap = k + 1;
      while (swap < n && a[swap][k] == 0) ++swap;
      if (swap == n) return 0;
      std::swap(a[k], a[swap]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
      }
    }
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

Mat to_real(const IntMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Mat r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(m[static_cast<std::size_t>(i)].size()) != n) {
      throw Error(ErrorCode::kInvalidArgument, "automorphism matrix must be square");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      r(i, j) = static_cast<double>(m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
  return r;
}

Mat orthonormal_columns(const Mat& raw) {
  Eigen::HouseholderQR<Mat> qr(raw);
  Mat q = qr.householderQ() * Mat::Identity(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Vec canonical_sign(Vec v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

AmbientPoint Diffeomorphism::inverse_apply(
    const AmbientPoint& y, const std::optional<AmbientPoint>& guess) const {
  if (y.dim() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "inverse_apply");
  }
  AmbientPoint x = guess ? *guess : initial_inverse_guess(y);
  Vec r = displacement(y, apply(x));
  double rnorm = r.lpNorm<Eigen::Infinity>();
  for (int step = 0; step < kMaxNewtonSteps; ++step) {
    if (rnorm < 1e-13) return x;
    Vec dx = differential(x).partialPivLu().solve(r);
    bool accepted = false;
    double damping = 1.0;
    for (int k = 0; k <= 10; ++k, damping *= 0.5) {
      AmbientPoint trial = x.translated(-damping * dx);
      Vec rt = displacement(y, apply(trial));
      double tn = rt.lpNorm<Eigen::Infinity>();
      if (tn < rnorm) {
        x = trial;
        r = rt;
        rnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (rnorm < 1e-11) return x;
  throw Error(ErrorCode::kNoConvergence,
              "inverse_apply residual " + std::to_string(rnorm));
}

LinearDiffeo::LinearDiffeo(Mat matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 2) {
    throw Error(ErrorCode::kInvalidDimension, "linear map must be square, d >= 2");
  }
  Eigen::FullPivLU<Mat> lu(matrix_);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kRankDeficient, "linear map is singular");
  }
  inverse_ = lu.inverse();
}

AmbientPoint LinearDiffeo::apply(const AmbientPoint& x) const {
  return x.with_coords(matrix_ * x.coords());
}

AmbientPoint LinearDiffeo::initial_inverse_guess(const AmbientPoint& y) const {
  return y.with_coords(inverse_ * y.coords());
}

// ---------------------------------------------------------------------------

ToralAutomorphism::ToralAutomorphism(IntMatrix matrix)
    : matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(matrix_.size());
  if (n < 2) throw Error(ErrorCode::kInvalidDimension, "automorphism needs n >= 2");
  real_ = to_real(matrix_);
  long long det = integer_determinant(matrix_);
  if (det != 1 && det != -1) {
    throw Error(ErrorCode::kInvalidArgument,
                "automorphism determinant " + std::to_string(det) + " is not +-1");
  }
  inverse_ = real_.inverse().array().round().matrix();

  Eigen::EigenSolver<Mat> es(real_);
  const auto& values = es.eigenvalues();
  const auto& vectors = es.eigenvectors();
  std::vector<Vec> stable_cols;
  std::vector<Vec> unstable_cols;
  stable_rate_ = 0.0;
  unstable_rate_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mod = std::abs(values[i]);
    if (std::abs(mod - 1.0) < 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "eigenvalue on the unit circle");
    }
    auto& bucket = mod < 1.0 ? stable_cols : unstable_cols;
    if (mod < 1.0) {
      stable_rate_ = std::max(stable_rate_, mod);
    } else {
      unstable_rate_ = std::min(unstable_rate_, mod);
    }
    const double im = values[i].imag();
    if (std::abs(im) < 1e-12) {
      bucket.push_back(vectors.col(i).real());
    } else if (im > 0) {
      bucket.push_back(vectors.col(i).real());
      bucket.push_back(vectors.col(i).imag());
    }
  }
  stable_dim_ = static_cast<int>(stable_cols.size());
  if (stable_dim_ == 0 || stable_dim_ == n) {
    throw Error(ErrorCode::kInvalidArgument, "automorphism is not hyperbolic of saddle type");
  }
  auto stack = [n](const std::vector<Vec>& cols) {
    Mat m(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      m.col(static_cast<Eigen::Index>(j)) = canonical_sign(cols[j].normalized());
    }
    return orthonormal_columns(m);
  };
  stable_basis_ = stack(stable_cols);
  unstable_basis_ = stack(unstable_cols);
}

ToralAutomorphism ToralAutomorphism::cat_map() {
  return ToralAutomorphism(IntMatrix{{2, 1}, {1, 1}});
}

ToralAutomorphism find_codim_one_automorphism(int n) {
  if (n < 2) {
    throw Error(ErrorCode::kNoSuchAutomorphism, "torus dimension must be >= 2");
  }
  if (n == 2) return ToralAutomorphism::cat_map();
  std::optional<IntMatrix> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int a = -4; a <= 4; ++a) {
    for (int b = -4; b <= 4; ++b) {
      for (int c0 : {1, -1}) {
        // Companion of x^n + a x^{n-1} + b x + c0.
        std::vector<long long> coeff(static_cast<std::size_t>(n), 0);
        coeff[0] += c0;
        coeff[1] += b;
        coeff[static_cast<std::size_t>(n - 1)] += a;
        IntMatrix m(static_cast<std::size_t>(n),
                    std::vector<long long>(static_cast<std::size_t>(n), 0));
        for (int i = 1; i < n; ++i) {
          m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i - 1)] = 1;
        }
        for (int i = 0; i < n; ++i) {
          m[static_cast<std::size_t>(i)][static_cast<std::size_t>(n - 1)] =
              -coeff[static_cast<std::size_t>(i)];
        }
        Eigen::EigenSolver<Mat> es(to_real(m), false);
        int inside = 0;
        bool near_circle = false;
        double stable = 0.0;
        double unstable = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
          double mod = std::abs(es.eigenvalues()[i]);
          if (std::abs(mod - 1.0) < 1e-3) near_circle = true;
          if (mod < 1.0) {
            ++inside;
            stable = std::max(stable, mod);
          } else {
            unstable = std::min(unstable, mod);
          }
        }
        if (near_circle || inside != 1) continue;
        double score = std::max(0.5, stable) / unstable;
        if (score < best_score) {
          best_score = score;
          best = m;
        }
      }
    }
  }
  if (!best) {
    throw Error(ErrorCode::kNoSuchAutomorphism,
                "no companion matrix with one stable root for n = " + std::to_string(n));
  }
  return ToralAutomorphism(*best);
}

// ---------------------------------------------------------------------------

double bump_profile(double r, double rho) {
  if (r >= rho) return 0.0;
  double u = 1.0 - (r * r) / (rho * rho);
  return u * u * u;
}

double bump_profile_slope_over_r(double r, double rho) {
  if (r >= rho) return 0.0;
  double u = 1.0 - (r * r) / (rho * rho);
  return -6.0 / (rho * rho) * u * u;
}

double DASurgery::strength_for_multiplier(double stable_eigenvalue,
                                          double multiplier) {
  if (!(multiplier > 0.0) || !(stable_eigenvalue > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "DA multiplier");
  }
  return std::sqrt(multiplier / stable_eigenvalue) - 1.0;
}

BaseMap::BaseMap(ToralAutomorphism automorphism, std::optional<DASurgery> surgery)
    : automorphism_(std::move(automorphism)), surgery_(std::move(surgery)) {
  stable_dir_ = canonical_sign(automorphism_.stable_basis().col(0));
  if (surgery_) {
    if (automorphism_.dim() != 2 || automorphism_.stable_dim() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "DA surgery needs a 2-torus saddle base");
    }
    if (surgery_->center.size() != 2) {
      throw Error(ErrorCode::kDimensionMismatch, "surgery center");
    }
    if (!(surgery_->rho > 0.0) || surgery_->rho >= 0.5) {
      throw Error(ErrorCode::kInvalidArgument, "surgery radius must lie in (0, 0.5)");
    }
    if (surgery_->mu < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "surgery strength must be >= 0");
    }
  }
}

Vec BaseMap::stable_direction() const { return stable_dir_; }

Vec BaseMap::stage(const Vec& p) const {
  const DASurgery& s = *surgery_;
  Vec delta = p - s.center;
  for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] -= std::floor(delta[i] + 0.5);
  const double r = delta.norm();
  if (r >= s.rho) return p;
  const double v = delta.dot(stable_dir_);
  return p + (s.mu * bump_profile(r, s.rho) * v) * stable_dir_;
}

Mat BaseMap::stage_jacobian(const Vec& p) const {
  const DASurgery& s = *surgery_;
  Vec delta = p - s.center;
  for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] -= std::floor(delta[i] + 0.5);
  const double r = delta.norm();
  Mat j = Mat::Identity(2, 2);
  if (r >= s.rho) return j;
  const double v = delta.dot(stable_dir_);
  Vec grad = bump_profile(r, s.rho) * stable_dir_ +
             (v * bump_profile_slope_over_r(r, s.rho)) * delta;
  j += s.mu * stable_dir_ * grad.transpose();
  return j;
}

Vec BaseMap::apply(const Vec& p) const {
  if (!surgery_) return automorphism_.matrix() * p;
  return automorphism_.matrix() * stage(stage(p));
}

Mat BaseMap::jacobian(const Vec& p) const {
  if (!surgery_) return automorphism_.matrix();
  Vec q = stage(p);
  return automorphism_.matrix() * stage_jacobian(q) * stage_jacobian(p);
}

// ---------------------------------------------------------------------------

double BumpPerturbation::unit_c1_estimate(double radius) {
  constexpr int kSamples = 10000;
  double sup = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    double r = radius * static_cast<double>(i) / kSamples;
    double value = bump_profile(r, radius);
    double grad = std::abs(bump_profile_slope_over_r(r, radius)) * r;
    sup = std::max(sup, value + grad);
  }
  return sup;
}

BumpPerturbation BumpPerturbation::with_c1_size(AmbientPoint center, double radius,
                                                const Vec& direction,
                                                double magnitude) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bump radius");
  if (magnitude < 0.0) throw Error(ErrorCode::kInvalidArgument, "bump magnitude");
  const double dn = direction.norm();
  if (magnitude == 0.0 || dn == 0.0) {
    return BumpPerturbation(std::move(center), radius, Vec::Zero(direction.size()), 0.0);
  }
  const double unit = unit_c1_estimate(radius);
  const double scale = magnitude / (1.1 * unit);
  Vec amplitude = direction * (scale / dn);
  return BumpPerturbation(std::move(center), radius, std::move(amplitude),
                          1.1 * unit * scale);
}

BumpPerturbation::BumpPerturbation(AmbientPoint center, double radius, Vec amplitude,
                                   double c1_bound)
    : center_(std::move(center)),
      radius_(radius),
      amplitude_(std::move(amplitude)),
      c1_bound_(c1_bound) {
  if (amplitude_.size() != center_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "bump amplitude");
  }
  if (!(radius_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bump radius");
}

bool BumpPerturbation::supports(const AmbientPoint& x) const {
  return distance(center_, x) < radius_;
}

Vec BumpPerturbation::displacement(const AmbientPoint& x) const {
  const double r = distance(center_, x);
  return bump_profile(r, radius_) * amplitude_;
}

Mat BumpPerturbation::jacobian(const AmbientPoint& x) const {
  Vec delta = tangency::displacement(center_, x);
  const double r = delta.norm();
  if (r >= radius_) return Mat::Zero(x.dim(), x.dim());
  return amplitude_ * (bump_profile_slope_over_r(r, radius_) * delta).transpose();
}

// ---------------------------------------------------------------------------

ScenarioSystem::ScenarioSystem(Vec lambda, BaseMap base, double epsilon,
                               std::vector<BumpPerturbation> perturbations)
    : lambda_(std::move(lambda)),
      base_(std::move(base)),
      epsilon_(epsilon),
      perturbations_(std::move(perturbations)) {
  for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
    if (!(lambda_[i] > 0.0 && lambda_[i] < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "contraction rates must lie in (0, 1)");
    }
  }
  if (!(epsilon_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  if (dim() < 2) throw Error(ErrorCode::kInvalidDimension, "d >= 2");
  for (const auto& b : perturbations_) {
    if (b.center().dim() != dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "perturbation dimension");
    }
  }
}

std::vector<bool> ScenarioSystem::periodic_mask() const {
  std::vector<bool> mask(static_cast<std::size_t>(dim()), true);
  for (int i = 0; i < box_dims(); ++i) mask[static_cast<std::size_t>(i)] = false;
  return mask;
}

ScenarioSystem ScenarioSystem::with_perturbations(
    std::vector<BumpPerturbation> bumps) const {
  return ScenarioSystem(lambda_, base_, epsilon_, std::move(bumps));
}

bool ScenarioSystem::unperturbed() const {
  return std::all_of(perturbations_.begin(), perturbations_.end(),
                     [](const BumpPerturbation& b) { return b.amplitude().isZero(0.0); });
}

AmbientPoint ScenarioSystem::apply(const AmbientPoint& x) const {
  const int m = box_dims();
  const int n = torus_dims();
  Vec out(dim());
  out.head(m) = lambda_.cwiseProduct(x.coords().head(m));
  out.tail(n) = base_.apply(x.coords().tail(n));
  for (const auto& b : perturbations_) out += b.displacement(x);
  return x.with_coords(out);
}

Mat ScenarioSystem::differential(const AmbientPoint& x) const {
  const int m = box_dims();
  const int n = torus_dims();
  Mat j = Mat::Zero(dim(), dim());
  for (int i = 0; i < m; ++i) j(i, i) = lambda_[i];
  j.bottomRightCorner(n, n) = base_.jacobian(x.coords().tail(n));
  for (const auto& b : perturbations_) j += b.jacobian(x);
  return j;
}

AmbientPoint ScenarioSystem::initial_inverse_guess(const AmbientPoint& y) const {
  const int m = box_dims();
  const int n = torus_dims();
  Vec x(dim());
  x.head(m) = y.coords().head(m).cwiseQuotient(lambda_);
  x.tail(n) = base_.automorphism().inverse() * y.coords().tail(n);
  return y.with_coords(x);
}

AmbientPoint ScenarioSystem::inverse_apply(
    const AmbientPoint& y, const std::optional<AmbientPoint>& guess) const {
  AmbientPoint x = Diffeomorphism::inverse_apply(y, guess);
  if (!in_box(x, 1e-12)) {
    throw Error(ErrorCode::kOutOfDomain, "preimage leaves the contracting box");
  }
  return x;
}

bool ScenarioSystem::in_box(const AmbientPoint& x, double slack) const {
  for (int i = 0; i < box_dims(); ++i) {
    if (std::abs(x[i]) > epsilon_ + slack) return false;
  }
  return true;
}

Subspace ScenarioSystem::unperturbed_stable_plane() const {
  const int m = box_dims();
  const int n = torus_dims();
  const int sdim = base_.automorphism().stable_dim();
  Mat f = Mat::Zero(dim(), m + sdim);
  for (int i = 0; i < m; ++i) f(i, i) = 1.0;
  if (base_.surgery()) {
    f.block(m, m, n, 1) = base_.stable_direction();
  } else {
    f.block(m, m, n, sdim) = base_.automorphism().stable_basis();
  }
  return Subspace::orthonormalize(f);
}

TrappingReport verify_trapping(const ScenarioSystem& sys, int grid_per_axis) {
  if (grid_per_axis < 2) {
    throw Error(ErrorCode::kInvalidArgument, "grid_per_axis must be >= 2");
  }
  TrappingReport report;
  const int m = sys.box_dims();
  const int n = sys.torus_dims();
  report.box_dims = m;
  if (m == 0) return report;

  auto box_value = [&](long long idx) {
    return -sys.epsilon() + 2.0 * sys.epsilon() * static_cast<double>(idx) /
                                (grid_per_axis - 1);
  };
  std::vector<Vec> torus_points;
  const double full = std::pow(static_cast<double>(grid_per_axis), sys.dim());
  if (full <= 2e5) {
    long long count = 1;
    for (int i = 0; i < n; ++i) count *= grid_per_axis;
    for (long long k = 0; k < count; ++k) {
      Vec p(n);
      long long rem = k;
      for (int i = 0; i < n; ++i) {
        p[i] = static_cast<double>(rem % grid_per_axis) / grid_per_axis;
        rem /= grid_per_axis;
      }
      torus_points.push_back(p);
    }
  } else {
    std::mt19937_64 rng(0x7a9b1cULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 64; ++k) {
      Vec p(n);
      for (int i = 0; i < n; ++i) p[i] = unit(rng);
      torus_points.push_back(p);
    }
    for (const auto& b : sys.perturbations()) {
      torus_points.push_back(b.center().coords().tail(n));
    }
  }

  long long box_count = 1;
  for (int i = 0; i < m; ++i) box_count *= grid_per_axis;
  double margin = std::numeric_limits<double>::infinity();
  for (long long k = 0; k < box_count; ++k) {
    Vec t(m);
    long long rem = k;
    for (int i = 0; i < m; ++i) {
      t[i] = box_value(rem % grid_per_axis);
      rem /= grid_per_axis;
    }
    for (const Vec& p : torus_points) {
      Vec x(sys.dim());
      x << t, p;
      AmbientPoint image = sys.apply(sys.point(x));
      double worst = image.coords().head(m).lpNorm<Eigen::Infinity>();
      margin = std::min(margin, sys.epsilon() - worst);
      ++report.samples;
    }
  }
  report.margin = margin;
  report.pass = margin > 0.0;
  return report;
}

}  // namespace tangency
