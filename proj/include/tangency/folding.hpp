#pragma once

// Folding manifolds: quadratic graphs (t, q(t)) placed in the ambient space by
// a similarity chart, their tangent planes, and the linear system that
// recovers the point x(E) whose tangent plane contains a given cone plane E.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tangency/ambient.hpp"

namespace tangency {

/// elliptic: q = t_1^2 + ... + t_s^2
/// saddle:   q = t_1 t_2 + t_2 t_3 + ... + t_{s-1} t_s
/// mixed:    q = (t_1^2, ..., t_{c-1}^2, t_c^2 + ... + t_k^2), k = c s
/// coupled:  q_1 = sum_{i<=s} t_i^2, q_m = sum_{i<=s} t_i t_{(m-1)s+i}
enum class FoldKind { kElliptic, kSaddle, kMixed, kCoupled };

const char* to_string(FoldKind kind);
FoldKind parse_fold_kind(const std::string& name);

/// Similarity chart: ambient = origin + scale * rotation * z (circle
/// coordinates wrapped). rotation is orthogonal; its first s columns are the
/// image of the model centre plane R^s x {0}.
struct Chart {
  AmbientPoint origin;
  Mat rotation;
  double scale = 1.0;

  void validate() const;
};

/// Small polynomial change of the normal coordinates:
/// q_l(t) += constant_l + linear.row(l) t + 1/2 t^T quadratic[l] t.
struct FoldPerturbation {
  Vec constant;
  Mat linear;
  std::vector<Mat> quadratic;

  static FoldPerturbation zero(int k, int codim);
  bool is_zero() const;
  /// Sampled sup over [-1,1]^k of |delta q| + |D delta q| (corners plus
  /// 4096 seeded interior points).
  double c1_size(int k) const;
};

class FoldingManifold {
 public:
  FoldingManifold(FoldKind kind, int s, int codim, Chart chart,
                  std::optional<FoldPerturbation> perturbation = std::nullopt);

  FoldKind kind() const { return kind_; }
  int s() const { return s_; }
  int codim() const { return codim_; }
  int k() const { return k_; }
  int ambient_dim() const { return k_ + codim_; }
  const Chart& chart() const { return chart_; }
  const std::optional<FoldPerturbation>& perturbation() const { return perturbation_; }

  FoldingManifold with_chart(Chart chart) const;
  FoldingManifold with_perturbation(std::optional<FoldPerturbation> p) const;

  /// Hessians of the normal coordinates (including any perturbation).
  const std::vector<Mat>& hessians() const { return hessians_; }

  Vec normal_values(const Vec& t) const;
  /// D q(t), codim x k.
  Mat normal_jacobian(const Vec& t) const;
  /// (t, q(t)) in model coordinates.
  Vec model_point(const Vec& t) const;

  /// Throws kOutOfDomain outside [-1,1]^k.
  AmbientPoint embed(const Vec& t) const;
  Subspace tangent_frame(const Vec& t) const;

  /// Image of R^s x {0}.
  Subspace center_plane() const;
  ConeField cone(double alpha) const;

  /// Rotate ambient vectors into model coordinates.
  Mat to_model(const Mat& ambient_vectors) const;
  /// Model coordinates of an ambient point relative to the chart origin.
  Vec model_coordinates(const AmbientPoint& x) const;

 private:
  void build_hessians();

  FoldKind kind_;
  int s_;
  int codim_;
  int k_;
  Chart chart_;
  std::optional<FoldPerturbation> perturbation_;
  std::vector<Mat> hessians_;
};

struct FoldLinearSystem {
  Mat a;
  Vec b;
};

/// Canonical graph basis of E over the model centre plane: d x s matrix whose
/// top s x s block is the identity. Throws kNotAGraph.
Mat model_graph_basis(const FoldingManifold& fold, const Subspace& e);

/// Square system A t = b whose solution puts E inside T_{x(t)} S.
/// Rows ordered (normal coordinate l, basis vector i) -> l * s + i.
FoldLinearSystem fold_linear_system(const FoldingManifold& fold, const Subspace& e);

/// Tangency defect of E at t: D q(t) top(w_i) - bottom(w_i), flattened the
/// same way as the rows of fold_linear_system (equals A t - b).
Vec fold_defect(const FoldingManifold& fold, const Mat& graph_basis, const Vec& t);

struct FoldPoint {
  Vec t;
  /// max over frame vectors of E of the distance to T_{x(t)} S.
  double residual = 0.0;
};

/// Throws kSingularSystem (|det A| < 1e-12), kOutOfDomain (|t|_inf > 1).
FoldPoint solve_fold_point(const FoldingManifold& fold, const Subspace& e);

struct FoldingCertificate {
  FoldKind kind = FoldKind::kElliptic;
  int k = 0;
  int s = 0;
  int codim = 0;
  double alpha = 0.0;
  int grid = 0;
  long long samples = 0;
  bool tensor_grid = true;
  double max_residual = 0.0;
  bool unique = true;
  double max_start_spread = 0.0;
  double continuity_modulus = 0.0;
  long long out_of_domain = 0;
  long long singular = 0;
  bool pass = false;
};

FoldingCertificate verify_folding(const FoldingManifold& fold, const ConeField& cone,
                                  int grid_per_axis, std::uint64_t seed = 1);

}  // namespace tangency
