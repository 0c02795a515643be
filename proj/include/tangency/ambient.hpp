#pragma once

// Linear-geometry kernel: ambient points with circle coordinates, subspaces
// held as orthonormal frames, principal angles and graph cones.

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

namespace tangency {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kDefaultAngleTol = 1e-9;
inline constexpr double kRankTol = 1e-10;
inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

/// Wrap a value into [0, 1).
double wrap_unit(double v);

/// Point of [-eps,eps]^m x T^n (or any mix of line and circle coordinates).
/// Circle coordinates are kept in [0, 1).
class AmbientPoint {
 public:
  AmbientPoint(Vec coords, std::vector<bool> periodic);

  int dim() const { return static_cast<int>(coords_.size()); }
  const Vec& coords() const { return coords_; }
  const std::vector<bool>& periodic() const { return periodic_; }
  double operator[](int i) const { return coords_[i]; }

  /// Same mask, new coordinates (wrapped).
  AmbientPoint with_coords(const Vec& coords) const;

  /// this + v with circle coordinates wrapped.
  AmbientPoint translated(const Vec& v) const;

 private:
  Vec coords_;
  std::vector<bool> periodic_;
};

/// Shortest displacement b - a, taking the nearest representative on every
/// circle coordinate (values in [-0.5, 0.5)).
Vec displacement(const AmbientPoint& a, const AmbientPoint& b);
double distance(const AmbientPoint& a, const AmbientPoint& b);

/// s-dimensional subspace of R^d, 1 <= s < d, stored as an orthonormal frame.
class Subspace {
 public:
  /// Gram-Schmidt via Householder QR with a positive-diagonal convention, so
  /// an already orthonormal, positively oriented frame is returned unchanged.
  static Subspace orthonormalize(const Mat& raw_frame);

  /// Keeps an orthonormal frame bit for bit (deserialisation). Throws
  /// kInvalidArgument when frame^T frame is off the identity by more than tol.
  static Subspace from_orthonormal(const Mat& frame, double tol = 1e-12);

  /// Coordinate subspace span{e_i : i in indices}.
  static Subspace coordinate(int ambient_dim, const std::vector<int>& indices);

  int ambient_dim() const { return static_cast<int>(frame_.rows()); }
  int dim() const { return static_cast<int>(frame_.cols()); }
  const Mat& frame() const { return frame_; }

  /// Orthogonal projector frame * frame^T.
  Mat projector() const { return frame_ * frame_.transpose(); }

  /// Orthonormal frame of the orthogonal complement (d x (d-s)).
  Mat complement() const;

  bool contains(const Vec& v, double tol = 1e-10) const;

 private:
  explicit Subspace(Mat frame) : frame_(std::move(frame)) {}
  Mat frame_;
};

/// Nondecreasing list of principal angles in [0, pi/2].
struct PrincipalAngles {
  std::vector<double> angles;

  double largest() const { return angles.empty() ? 0.0 : angles.back(); }
  int count_below(double tol) const;
};

PrincipalAngles principal_angles(const Subspace& u, const Subspace& v);

/// True iff every principal angle is below angle_tol (requires equal dims).
bool same_subspace(const Subspace& u, const Subspace& v,
                   double angle_tol = kDefaultAngleTol);

/// Cone of s-planes that are graphs over `center` of linear maps into the
/// orthogonal complement with operator norm below alpha.
class ConeField {
 public:
  ConeField(Subspace center, double alpha);

  const Subspace& center() const { return center_; }
  double alpha() const { return alpha_; }
  /// Orthonormal complement frame used for graph coordinates.
  const Mat& normal() const { return normal_; }

  /// Plane spanned by center + normal * graph, graph of size (d-s) x s.
  Subspace plane_from_graph(const Mat& graph) const;

 private:
  Subspace center_;
  double alpha_;
  Mat normal_;
};

/// Graph map of E over the cone's centre in (normal, center) coordinates,
/// i.e. the (d-s) x s matrix L with E = span(C + N L). Empty when the
/// projection onto the centre is not invertible.
std::optional<Mat> graph_map(const Subspace& e, const ConeField& cone);

/// Operator norm of the graph map, kInfinite when E is not a graph.
double graph_norm(const Subspace& e, const ConeField& cone);

bool cone_membership(const Subspace& e, const ConeField& cone);

}  // namespace tangency
