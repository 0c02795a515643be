#include "tangency/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tangency/error.hpp"

namespace tangency {

double wrap_unit(double v) {
  double w = v - std::floor(v);
  // floor can leave exactly 1.0 for tiny negative inputs.
  return w >= 1.0 ? 0.0 : w;
}

AmbientPoint::AmbientPoint(Vec coords, std::vector<bool> periodic)
    : coords_(std::move(coords)), periodic_(std::move(periodic)) {
  if (coords_.size() < 2) {
    throw Error(ErrorCode::kInvalidDimension, "ambient dimension must be >= 2");
  }
  if (static_cast<Eigen::Index>(periodic_.size()) != coords_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "periodic mask length");
  }
  for (int i = 0; i < dim(); ++i) {
    if (periodic_[i]) coords_[i] = wrap_unit(coords_[i]);
  }
}

AmbientPoint AmbientPoint::with_coords(const Vec& coords) const {
  return AmbientPoint(coords, periodic_);
}

AmbientPoint AmbientPoint::translated(const Vec& v) const {
  if (v.size() != coords_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "translation length");
  }
  return AmbientPoint(coords_ + v, periodic_);
}

Vec displacement(const AmbientPoint& a, const AmbientPoint& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "displacement");
  }
  Vec d = b.coords() - a.coords();
  for (int i = 0; i < d.size(); ++i) {
    if (a.periodic()[i]) d[i] -= std::floor(d[i] + 0.5);
  }
  return d;
}

double distance(const AmbientPoint& a, const AmbientPoint& b) {
  return displacement(a, b).norm();
}

Subspace Subspace::orthonormalize(const Mat& raw) {
  const auto d = raw.rows();
  const auto s = raw.cols();
  if (s < 1 || s >= d) {
    throw Error(ErrorCode::kInvalidDimension,
                "subspace dimension " + std::to_string(s) +
                    " must satisfy 1 <= s < d = " + std::to_string(d));
  }
  Eigen::JacobiSVD<Mat> svd(raw);
  if (svd.singularValues()(s - 1) < kRankTol) {
    throw Error(ErrorCode::kRankDeficient,
                "numerical rank below " + std::to_string(s));
  }
  Eigen::HouseholderQR<Mat> qr(raw);
  Mat q = qr.householderQ() * Mat::Identity(d, s);
  const Mat& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < s; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return Subspace(std::move(q));
}

Subspace Subspace::from_orthonormal(const Mat& frame, double tol) {
  const auto d = frame.rows();
  const auto s = frame.cols();
  if (s < 1 || s >= d) {
    throw Error(ErrorCode::kInvalidDimension,
                "subspace dimension " + std::to_string(s) +
                    " must satisfy 1 <= s < d = " + std::to_string(d));
  }
  if (!((frame.transpose() * frame - Mat::Identity(s, s)).lpNorm<Eigen::Infinity>() <= tol)) {
    throw Error(ErrorCode::kInvalidArgument, "frame is not orthonormal");
  }
  return Subspace(frame);
}

Subspace Subspace::coordinate(int ambient_dim, const std::vector<int>& indices) {
  Mat f = Mat::Zero(ambient_dim, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] < 0 || indices[j] >= ambient_dim) {
      throw Error(ErrorCode::kInvalidArgument, "coordinate index");
    }
    f(indices[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return orthonormalize(f);
}

Mat Subspace::complement() const {
  const auto d = frame_.rows();
  const auto s = frame_.cols();
  Eigen::HouseholderQR<Mat> qr(frame_);
  Mat full = qr.householderQ() * Mat::Identity(d, d);
  return full.rightCols(d - s);
}

bool Subspace::contains(const Vec& v, double tol) const {
  Vec r = v - frame_ * (frame_.transpose() * v);
  return r.norm() <= tol * std::max(1.0, v.norm());
}

int PrincipalAngles::count_below(double tol) const {
  return static_cast<int>(
      std::count_if(angles.begin(), angles.end(), [&](double a) { return a < tol; }));
}

PrincipalAngles principal_angles(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "principal_angles");
  }
  const Mat& big = u.dim() >= v.dim() ? u.frame() : v.frame();
  const Mat& small = u.dim() >= v.dim() ? v.frame() : u.frame();
  const Mat cross = big.transpose() * small;
  Eigen::JacobiSVD<Mat> csvd(cross);
  Eigen::JacobiSVD<Mat> ssvd(small - big * cross);
  Vec cosines = csvd.singularValues();  // descending
  Vec sines = ssvd.singularValues();    // descending
  const auto q = small.cols();
  PrincipalAngles out;
  out.angles.resize(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < q; ++i) {
    double c = std::clamp(cosines(i), 0.0, 1.0);
    double s = std::clamp(sines(q - 1 - i), 0.0, 1.0);
    out.angles[static_cast<std::size_t>(i)] =
        c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  std::sort(out.angles.begin(), out.angles.end());
  return out;
}

bool same_subspace(const Subspace& u, const Subspace& v, double angle_tol) {
  if (u.dim() != v.dim()) return false;
  return principal_angles(u, v).largest() < angle_tol;
}

ConeField::ConeField(Subspace center, double alpha)
    : center_(std::move(center)), alpha_(alpha), normal_(center_.complement()) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cone aperture must lie in (0, 1)");
  }
}

Subspace ConeField::plane_from_graph(const Mat& graph) const {
  if (graph.rows() != normal_.cols() || graph.cols() != center_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "graph map shape");
  }
  return Subspace::orthonormalize(center_.frame() + normal_ * graph);
}

std::optional<Mat> graph_map(const Subspace& e, const ConeField& cone) {
  if (e.ambient_dim() != cone.center().ambient_dim() ||
      e.dim() != cone.center().dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "graph_map");
  }
  const Mat x = cone.center().frame().transpose() * e.frame();
  Eigen::JacobiSVD<Mat> svd(x);
  const Vec& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-12) return std::nullopt;
  const Mat y = cone.normal().transpose() * e.frame();
  return Mat(y * x.inverse());
}

double graph_norm(const Subspace& e, const ConeField& cone) {
  auto l = graph_map(e, cone);
  if (!l) return kInfinite;
  if (l->size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(*l);
  return svd.singularValues()(0);
}

bool cone_membership(const Subspace& e, const ConeField& cone) {
  return graph_norm(e, cone) < cone.alpha();
}

}  // namespace tangency
