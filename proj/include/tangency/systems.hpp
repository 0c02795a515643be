#pragma once

// Model diffeomorphisms with exact differentials: hyperbolic toral
// automorphisms, DA surgery on T^2, contraction x base skew products and
// compactly supported bump perturbations.

#include <optional>
#include <vector>

#include "tangency/ambient.hpp"

namespace tangency {

using IntMatrix = std::vector<std::vector<long long>>;

/// Interface shared by every map the cocycle and detectors consume.
class Diffeomorphism {
 public:
  virtual ~Diffeomorphism() = default;

  virtual int dim() const = 0;
  virtual std::vector<bool> periodic_mask() const = 0;
  virtual AmbientPoint apply(const AmbientPoint& x) const = 0;
  virtual Mat differential(const AmbientPoint& x) const = 0;

  /// Newton inversion. Without a guess, starts from initial_inverse_guess.
  /// Throws kNoConvergence after 50 steps.
  virtual AmbientPoint inverse_apply(
      const AmbientPoint& y,
      const std::optional<AmbientPoint>& guess = std::nullopt) const;

  AmbientPoint point(const Vec& coords) const {
    return AmbientPoint(coords, periodic_mask());
  }

 protected:
  virtual AmbientPoint initial_inverse_guess(const AmbientPoint& y) const = 0;
};

/// x -> M x on R^d. Used for toy checks such as diag(1/2, 2).
class LinearDiffeo final : public Diffeomorphism {
 public:
  explicit LinearDiffeo(Mat matrix);

  int dim() const override { return static_cast<int>(matrix_.rows()); }
  std::vector<bool> periodic_mask() const override {
    return std::vector<bool>(static_cast<std::size_t>(dim()), false);
  }
  AmbientPoint apply(const AmbientPoint& x) const override;
  Mat differential(const AmbientPoint&) const override { return matrix_; }

 protected:
  AmbientPoint initial_inverse_guess(const AmbientPoint& y) const override;

 private:
  Mat matrix_;
  Mat inverse_;
};

/// Integer matrix with |det| = 1 and no eigenvalue on the unit circle.
class ToralAutomorphism {
 public:
  explicit ToralAutomorphism(IntMatrix matrix);

  int dim() const { return static_cast<int>(matrix_.size()); }
  const IntMatrix& integer_matrix() const { return matrix_; }
  const Mat& matrix() const { return real_; }
  const Mat& inverse() const { return inverse_; }
  int stable_dim() const { return stable_dim_; }

  /// Orthonormal frames of the real stable / unstable eigenspaces.
  const Mat& stable_basis() const { return stable_basis_; }
  const Mat& unstable_basis() const { return unstable_basis_; }
  /// Largest modulus inside / smallest modulus outside the unit circle.
  double stable_rate() const { return stable_rate_; }
  double unstable_rate() const { return unstable_rate_; }

  /// The cat map [[2,1],[1,1]].
  static ToralAutomorphism cat_map();

 private:
  IntMatrix matrix_;
  Mat real_;
  Mat inverse_;
  int stable_dim_ = 0;
  Mat stable_basis_;
  Mat unstable_basis_;
  double stable_rate_ = 0.0;
  double unstable_rate_ = 0.0;
};

/// Searches companion matrices of x^n + a x^{n-1} + b x + c0 (|a|,|b| <= 4,
/// c0 = +-1) for one with exactly one root inside the unit circle, keeping
/// the one with the best stable/unstable rate gap. n = 2 returns the cat map.
/// Throws kNoSuchAutomorphism when nothing qualifies.
ToralAutomorphism find_codim_one_automorphism(int n);

/// C^2 radial bump (1 - (r/rho)^2)^3 on [0, rho), zero beyond.
double bump_profile(double r, double rho);
/// d/dr of bump_profile divided by r (smooth at r = 0).
double bump_profile_slope_over_r(double r, double rho);

/// DA surgery on T^2 around a fixed point: p -> p + mu beta(|p-c|) <p-c, e_s> e_s
/// applied twice before the automorphism. Each stage is monotone along e_s,
/// so the composite stays a diffeomorphism while the fixed point's stable
/// multiplier becomes lambda_s (1 + mu)^2.
struct DASurgery {
  Vec center;  // fixed point of the base, (0, 0)
  double rho = 0.15;
  double mu = 0.0;

  /// Per-stage strength giving the requested multiplier at the fixed point.
  static double strength_for_multiplier(double stable_eigenvalue,
                                        double multiplier);
};

/// Base dynamics on T^n: automorphism, optionally with DA surgery (n = 2).
class BaseMap {
 public:
  BaseMap(ToralAutomorphism automorphism, std::optional<DASurgery> surgery);

  int dim() const { return automorphism_.dim(); }
  const ToralAutomorphism& automorphism() const { return automorphism_; }
  const std::optional<DASurgery>& surgery() const { return surgery_; }

  /// Image on the torus, unwrapped (caller wraps).
  Vec apply(const Vec& p) const;
  Mat jacobian(const Vec& p) const;

  /// Unit vector along the stable eigendirection (n = 2 with surgery) or the
  /// first stable basis vector.
  Vec stable_direction() const;

 private:
  Vec stage(const Vec& p) const;
  Mat stage_jacobian(const Vec& p) const;

  ToralAutomorphism automorphism_;
  std::optional<DASurgery> surgery_;
  Vec stable_dir_;
};

/// Vector field beta(|x - c| / r) * amplitude with the C^2 profile above.
class BumpPerturbation {
 public:
  /// Rescales `direction` so the sampled C^1 size times 1.1 equals
  /// `magnitude` (10^4 radial samples).
  static BumpPerturbation with_c1_size(AmbientPoint center, double radius,
                                       const Vec& direction, double magnitude);

  BumpPerturbation(AmbientPoint center, double radius, Vec amplitude,
                   double c1_bound);

  const AmbientPoint& center() const { return center_; }
  double radius() const { return radius_; }
  const Vec& amplitude() const { return amplitude_; }
  double c1_bound() const { return c1_bound_; }

  Vec displacement(const AmbientPoint& x) const;
  Mat jacobian(const AmbientPoint& x) const;
  bool supports(const AmbientPoint& x) const;

  /// sup over 10^4 radial samples of beta + |grad beta| for unit amplitude.
  static double unit_c1_estimate(double radius);

 private:
  AmbientPoint center_;
  double radius_;
  Vec amplitude_;
  double c1_bound_;
};

struct TrappingReport {
  bool pass = true;
  /// min over samples of eps - max_i |box coordinate i of the image|;
  /// empty when there are no box coordinates.
  std::optional<double> margin;
  long long samples = 0;
  int box_dims = 0;
};

/// f = g x h on [-eps,eps]^m x T^n, g(t) = lambda (.) t, plus bumps.
class ScenarioSystem final : public Diffeomorphism {
 public:
  ScenarioSystem(Vec lambda, BaseMap base, double epsilon,
                 std::vector<BumpPerturbation> perturbations = {});

  int dim() const override { return box_dims() + base_.dim(); }
  int box_dims() const { return static_cast<int>(lambda_.size()); }
  int torus_dims() const { return base_.dim(); }
  std::vector<bool> periodic_mask() const override;

  const Vec& lambda() const { return lambda_; }
  const BaseMap& base() const { return base_; }
  double epsilon() const { return epsilon_; }
  const std::vector<BumpPerturbation>& perturbations() const {
    return perturbations_;
  }

  ScenarioSystem with_perturbations(std::vector<BumpPerturbation> bumps) const;
  bool unperturbed() const;

  AmbientPoint apply(const AmbientPoint& x) const override;
  Mat differential(const AmbientPoint& x) const override;
  /// Newton inversion followed by a box-domain check (kOutOfDomain).
  AmbientPoint inverse_apply(
      const AmbientPoint& y,
      const std::optional<AmbientPoint>& guess = std::nullopt) const override;

  /// Unperturbed stable bundle R^m (+) stable eigendirection of the base.
  Subspace unperturbed_stable_plane() const;

  bool in_box(const AmbientPoint& x, double slack = 0.0) const;

 protected:
  AmbientPoint initial_inverse_guess(const AmbientPoint& y) const override;

 private:
  Vec lambda_;
  BaseMap base_;
  double epsilon_;
  std::vector<BumpPerturbation> perturbations_;
};

TrappingReport verify_trapping(const ScenarioSystem& sys, int grid_per_axis);

}  // namespace tangency
