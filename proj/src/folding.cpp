#include "tangency/folding.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tangency/error.hpp"

namespace tangency {

const char* to_string(FoldKind kind) {
  switch (kind) {
    case FoldKind::kElliptic: return "elliptic";
    case FoldKind::kSaddle: return "saddle";
    case FoldKind::kMixed: return "mixed";
    case FoldKind::kCoupled: return "coupled";
  }
  return "unknown";
}

FoldKind parse_fold_kind(const std::string& name) {
  if (name == "elliptic") return FoldKind::kElliptic;
  if (name == "saddle") return FoldKind::kSaddle;
  if (name == "mixed") return FoldKind::kMixed;
  if (name == "coupled") return FoldKind::kCoupled;
  throw Error(ErrorCode::kInvalidArgument, "unknown fold kind '" + name + "'");
}

void Chart::validate() const {
  const auto d = rotation.rows();
  if (rotation.cols() != d || d != origin.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "chart rotation shape");
  }
  if ((rotation.transpose() * rotation - Mat::Identity(d, d)).lpNorm<Eigen::Infinity>() >
      1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "chart rotation is not orthogonal");
  }
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "chart scale must be > 0");
}

FoldPerturbation FoldPerturbation::zero(int k, int codim) {
  FoldPerturbation p;
  p.constant = Vec::Zero(codim);
  p.linear = Mat::Zero(codim, k);
  p.quadratic.assign(static_cast<std::size_t>(codim), Mat::Zero(k, k));
  return p;
}

bool FoldPerturbation::is_zero() const {
  if (!constant.isZero(0.0) || !linear.isZero(0.0)) return false;
  return std::all_of(quadratic.begin(), quadratic.end(),
                     [](const Mat& q) { return q.isZero(0.0); });
}

double FoldPerturbation::c1_size(int k) const {
  const auto codim = constant.size();
  auto eval = [&](const Vec& t) {
    Vec value(codim);
    Mat grad(codim, k);
    for (Eigen::Index l = 0; l < codim; ++l) {
      const Mat& q = quadratic[static_cast<std::size_t>(l)];
      value[l] = constant[l] + linear.row(l).dot(t) + 0.5 * t.dot(q * t);
      grad.row(l) = linear.row(l) + (q * t).transpose();
    }
    Eigen::JacobiSVD<Mat> svd(grad);
    return value.norm() + svd.singularValues()(0);
  };
  double sup = 0.0;
  if (k <= 12) {
    for (long long mask = 0; mask < (1LL << k); ++mask) {
      Vec t(k);
      for (int i = 0; i < k; ++i) t[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      sup = std::max(sup, eval(t));
    }
  }
  std::mt19937_64 rng(0xf01dULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int n = 0; n < 4096; ++n) {
    Vec t(k);
    for (int i = 0; i < k; ++i) t[i] = unit(rng);
    sup = std::max(sup, eval(t));
  }
  sup = std::max(sup, eval(Vec::Zero(k)));
  return sup;
}

FoldingManifold::FoldingManifold(FoldKind kind, int s, int codim, Chart chart,
                                 std::optional<FoldPerturbation> perturbation)
    : kind_(kind),
      s_(s),
      codim_(codim),
      k_(0),
      chart_(std::move(chart)),
      perturbation_(std::move(perturbation)) {
  if (s_ < 1 || codim_ < 1) {
    throw Error(ErrorCode::kInvalidDimension, "fold needs s >= 1 and c_T >= 1");
  }
  switch (kind_) {
    case FoldKind::kElliptic:
    case FoldKind::kSaddle:
      if (codim_ != 1) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string(to_string(kind_)) + " folds have c_T = 1");
      }
      k_ = s_;
      break;
    case FoldKind::kMixed:
    case FoldKind::kCoupled:
      k_ = codim_ * s_;
      break;
  }
  chart_.validate();
  if (chart_.origin.dim() != k_ + codim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "chart dimension must equal k + c_T = " + std::to_string(k_ + codim_));
  }
  if (perturbation_) {
    if (perturbation_->constant.size() != codim_ || perturbation_->linear.rows() != codim_ ||
        perturbation_->linear.cols() != k_ ||
        static_cast<int>(perturbation_->quadratic.size()) != codim_) {
      throw Error(ErrorCode::kDimensionMismatch, "fold perturbation shape");
    }
  }
  build_hessians();
}

void FoldingManifold::build_hessians() {
  hessians_.assign(static_cast<std::size_t>(codim_), Mat::Zero(k_, k_));
  switch (kind_) {
    case FoldKind::kElliptic:
      hessians_[0] = 2.0 * Mat::Identity(k_, k_);
      break;
    case FoldKind::kSaddle:
      for (int i = 0; i + 1 < k_; ++i) {
        hessians_[0](i, i + 1) = 1.0;
        hessians_[0](i + 1, i) = 1.0;
      }
      break;
    case FoldKind::kMixed:
      for (int l = 0; l + 1 < codim_; ++l) hessians_[static_cast<std::size_t>(l)](l, l) = 2.0;
      for (int j = codim_ - 1; j < k_; ++j) {
        hessians_[static_cast<std::size_t>(codim_ - 1)](j, j) = 2.0;
      }
      break;
    case FoldKind::kCoupled:
      for (int i = 0; i < s_; ++i) hessians_[0](i, i) = 2.0;
      for (int m = 1; m < codim_; ++m) {
        for (int i = 0; i < s_; ++i) {
          hessians_[static_cast<std::size_t>(m)](i, m * s_ + i) = 1.0;
          hessians_[static_cast<std::size_t>(m)](m * s_ + i, i) = 1.0;
        }
      }
      break;
  }
  if (perturbation_) {
    for (int l = 0; l < codim_; ++l) {
      const Mat& q = perturbation_->quadratic[static_cast<std::size_t>(l)];
      hessians_[static_cast<std::size_t>(l)] += 0.5 * (q + q.transpose());
    }
  }
}

FoldingManifold FoldingManifold::with_chart(Chart chart) const {
  return FoldingManifold(kind_, s_, codim_, std::move(chart), perturbation_);
}

FoldingManifold FoldingManifold::with_perturbation(std::optional<FoldPerturbation> p) const {
  return FoldingManifold(kind_, s_, codim_, chart_, std::move(p));
}

Vec FoldingManifold::normal_values(const Vec& t) const {
  Vec q(codim_);
  for (int l = 0; l < codim_; ++l) {
    q[l] = 0.5 * t.dot(hessians_[static_cast<std::size_t>(l)] * t);
  }
  if (perturbation_) q += perturbation_->constant + perturbation_->linear * t;
  return q;
}

Mat FoldingManifold::normal_jacobian(const Vec& t) const {
  Mat j(codim_, k_);
  for (int l = 0; l < codim_; ++l) {
    j.row(l) = (hessians_[static_cast<std::size_t>(l)] * t).transpose();
  }
  if (perturbation_) j += perturbation_->linear;
  return j;
}

Vec FoldingManifold::model_point(const Vec& t) const {
  if (t.size() != k_) throw Error(ErrorCode::kDimensionMismatch, "fold parameter length");
  Vec z(k_ + codim_);
  z << t, normal_values(t);
  return z;
}

AmbientPoint FoldingManifold::embed(const Vec& t) const {
  if (t.size() != k_) throw Error(ErrorCode::kDimensionMismatch, "fold parameter length");
  if (t.lpNorm<Eigen::Infinity>() > 1.0 + 1e-12) {
    throw Error(ErrorCode::kOutOfDomain, "fold parameter outside [-1,1]^k");
  }
  return chart_.origin.translated(chart_.scale * (chart_.rotation * model_point(t)));
}

Subspace FoldingManifold::tangent_frame(const Vec& t) const {
  Mat jac(k_ + codim_, k_);
  jac.topRows(k_) = Mat::Identity(k_, k_);
  jac.bottomRows(codim_) = normal_jacobian(t);
  return Subspace::orthonormalize(chart_.rotation * jac);
}

Subspace FoldingManifold::center_plane() const {
  return Subspace::orthonormalize(chart_.rotation.leftCols(s_));
}

ConeField FoldingManifold::cone(double alpha) const {
  return ConeField(center_plane(), alpha);
}

Mat FoldingManifold::to_model(const Mat& ambient_vectors) const {
  return chart_.rotation.transpose() * ambient_vectors;
}

Vec FoldingManifold::model_coordinates(const AmbientPoint& x) const {
  return chart_.rotation.transpose() * displacement(chart_.origin, x) / chart_.scale;
}

Mat model_graph_basis(const FoldingManifold& fold, const Subspace& e) {
  if (e.ambient_dim() != fold.ambient_dim() || e.dim() != fold.s()) {
    throw Error(ErrorCode::kDimensionMismatch, "plane must be an s-plane of the chart ambient");
  }
  const Mat m = fold.to_model(e.frame());
  const Mat x = m.topRows(fold.s());
  Eigen::JacobiSVD<Mat> svd(x);
  if (svd.singularValues()(fold.s() - 1) < 1e-12) {
    throw Error(ErrorCode::kNotAGraph, "plane is not a graph over the cone centre");
  }
  return m * x.inverse();
}

Vec fold_defect(const FoldingManifold& fold, const Mat& w, const Vec& t) {
  const int s = fold.s();
  const int k = fold.k();
  const int c = fold.codim();
  const Mat dq = fold.normal_jacobian(t);
  const Mat defect = dq * w.topRows(k) - w.bottomRows(c);  // c x s
  Vec out(c * s);
  for (int l = 0; l < c; ++l) {
    for (int i = 0; i < s; ++i) out[l * s + i] = defect(l, i);
  }
  return out;
}

FoldLinearSystem fold_linear_system(const FoldingManifold& fold, const Subspace& e) {
  const Mat w = model_graph_basis(fold, e);
  const int s = fold.s();
  const int k = fold.k();
  const int c = fold.codim();
  FoldLinearSystem sys;
  sys.a = Mat::Zero(c * s, k);
  sys.b = Vec::Zero(c * s);
  Mat offset = Mat::Zero(c, k);
  if (fold.perturbation()) offset = fold.perturbation()->linear;
  for (int l = 0; l < c; ++l) {
    const Mat& h = fold.hessians()[static_cast<std::size_t>(l)];
    for (int i = 0; i < s; ++i) {
      const Vec top = w.col(i).head(k);
      sys.a.row(l * s + i) = top.transpose() * h;
      sys.b[l * s + i] = w(k + l, i) - offset.row(l).dot(top);
    }
  }
  return sys;
}

FoldPoint solve_fold_point(const FoldingManifold& fold, const Subspace& e) {
  FoldLinearSystem sys = fold_linear_system(fold, e);
  if (sys.a.rows() != sys.a.cols()) {
    throw Error(ErrorCode::kSingularSystem, "fold system is not square");
  }
  Eigen::PartialPivLU<Mat> lu(sys.a);
  if (std::abs(lu.determinant()) < 1e-12) {
    throw Error(ErrorCode::kSingularSystem, "|det A| below 1e-12");
  }
  FoldPoint p;
  p.t = lu.solve(sys.b);
  if (p.t.lpNorm<Eigen::Infinity>() > 1.0) {
    throw Error(ErrorCode::kOutOfDomain, "fold point outside [-1,1]^k");
  }
  const Mat tangent = fold.tangent_frame(p.t).frame();
  const Mat f = e.frame();
  const Mat normal_part = f - tangent * (tangent.transpose() * f);
  p.residual = normal_part.colwise().norm().maxCoeff();
  return p;
}

namespace {

Vec newton_fold_point(const FoldingManifold& fold, const Mat& w, Vec t) {
  const int k = fold.k();
  constexpr double h = 1e-6;
  for (int it = 0; it < 20; ++it) {
    Vec r = fold_defect(fold, w, t);
    if (r.norm() < 1e-15) break;
    Mat j(r.size(), k);
    for (int i = 0; i < k; ++i) {
      Vec tp = t;
      Vec tm = t;
      tp[i] += h;
      tm[i] -= h;
      j.col(i) = (fold_defect(fold, w, tp) - fold_defect(fold, w, tm)) / (2 * h);
    }
    Vec step = j.partialPivLu().solve(r);
    t -= step;
    if (step.norm() < 1e-15) break;
  }
  return t;
}

Mat radial_graph(const Vec& raw, const ConeField& cone) {
  const auto rows = cone.normal().cols();
  const auto cols = cone.center().dim();
  Mat l = Eigen::Map<const Mat>(raw.data(), rows, cols);
  const double maxabs = raw.lpNorm<Eigen::Infinity>();
  if (maxabs == 0.0) return l;
  Eigen::JacobiSVD<Mat> svd(l);
  return l * (cone.alpha() * maxabs / svd.singularValues()(0));
}

}  // namespace

FoldingCertificate verify_folding(const FoldingManifold& fold, const ConeField& cone,
                                  int grid_per_axis, std::uint64_t seed) {
  if (grid_per_axis < 2) throw Error(ErrorCode::kInvalidArgument, "grid_per_axis >= 2");
  if (!same_subspace(cone.center(), fold.center_plane(), 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument, "cone centre must be the fold's centre plane");
  }
  FoldingCertificate cert;
  cert.kind = fold.kind();
  cert.k = fold.k();
  cert.s = fold.s();
  cert.codim = fold.codim();
  cert.alpha = cone.alpha();
  cert.grid = grid_per_axis;

  const int k = fold.k();
  const int dims = static_cast<int>(cone.normal().cols() * cone.center().dim());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Returns the solved point (ambient coordinates) or nothing.
  auto process = [&](const Vec& raw) -> std::optional<AmbientPoint> {
    ++cert.samples;
    const Subspace e = cone.plane_from_graph(radial_graph(raw, cone));
    FoldPoint p;
    try {
      p = solve_fold_point(fold, e);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::kOutOfDomain) {
        ++cert.out_of_domain;
      } else {
        ++cert.singular;
      }
      return std::nullopt;
    }
    cert.max_residual = std::max(cert.max_residual, p.residual);
    const Mat w = model_graph_basis(fold, e);
    double spread = 0.0;
    for (int start = 0; start < 3; ++start) {
      Vec t0(k);
      for (int i = 0; i < k; ++i) t0[i] = unit(rng);
      spread = std::max(spread, (newton_fold_point(fold, w, t0) - p.t).norm());
    }
    cert.max_start_spread = std::max(cert.max_start_spread, spread);
    if (!(spread < 1e-8)) cert.unique = false;
    return fold.embed(p.t);
  };

  auto grid_value = [&](long long i) {
    return -1.0 + 2.0 * static_cast<double>(i) / (grid_per_axis - 1);
  };
  auto track = [&](const std::optional<AmbientPoint>& a, const std::optional<AmbientPoint>& b) {
    if (a && b) cert.continuity_modulus = std::max(cert.continuity_modulus, distance(*a, *b));
  };

  const double full = std::pow(static_cast<double>(grid_per_axis), dims);
  if (full <= 2e5) {
    cert.tensor_grid = true;
    const auto total = static_cast<long long>(std::llround(full));
    std::vector<std::optional<AmbientPoint>> points;
    points.reserve(static_cast<std::size_t>(total));
    for (long long idx = 0; idx < total; ++idx) {
      Vec raw(dims);
      long long rem = idx;
      for (int e = 0; e < dims; ++e) {
        raw[e] = grid_value(rem % grid_per_axis);
        rem /= grid_per_axis;
      }
      points.push_back(process(raw));
    }
    long long stride = 1;
    for (int e = 0; e < dims; ++e) {
      for (long long idx = 0; idx < total; ++idx) {
        if ((idx / stride) % grid_per_axis + 1 < grid_per_axis) {
          track(points[static_cast<std::size_t>(idx)],
                points[static_cast<std::size_t>(idx + stride)]);
        }
      }
      stride *= grid_per_axis;
    }
  } else {
    cert.tensor_grid = false;
    for (int a = 0; a < dims; ++a) {
      for (int b = a + 1; b < dims; ++b) {
        std::vector<std::optional<AmbientPoint>> plane;
        for (int i = 0; i < grid_per_axis; ++i) {
          for (int j = 0; j < grid_per_axis; ++j) {
            Vec raw = Vec::Zero(dims);
            raw[a] = grid_value(i);
            raw[b] = grid_value(j);
            plane.push_back(process(raw));
          }
        }
        for (int i = 0; i < grid_per_axis; ++i) {
          for (int j = 0; j < grid_per_axis; ++j) {
            const auto at = [&](int ii, int jj) -> const std::optional<AmbientPoint>& {
              return plane[static_cast<std::size_t>(ii * grid_per_axis + jj)];
            };
            if (i + 1 < grid_per_axis) track(at(i, j), at(i + 1, j));
            if (j + 1 < grid_per_axis) track(at(i, j), at(i, j + 1));
          }
        }
      }
    }
    for (int n = 0; n < 2000; ++n) {
      Vec raw(dims);
      for (int e = 0; e < dims; ++e) raw[e] = unit(rng);
      if (n % 2 == 1) raw /= raw.lpNorm<Eigen::Infinity>();  // boundary shell
      process(raw);
    }
  }
  cert.pass = cert.out_of_domain == 0 && cert.singular == 0 && cert.unique &&
              cert.max_residual < 1e-9;
  return cert;
}

}  // namespace tangency
