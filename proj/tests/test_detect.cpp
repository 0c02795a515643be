#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tangency/detect.hpp"
#include "tangency/error.hpp"
#include "tangency/robustness.hpp"
#include "tangency/scenario.hpp"

using namespace tangency;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

Subspace coord(int d, std::vector<int> idx) { return Subspace::coordinate(d, idx); }

// Scenario with one overlapping bump of the given C1 size.
Scenario perturbed(int c_t, int s, double magnitude, std::uint64_t seed) {
  Scenario sc = build_scenario(c_t, s);
  return sc.with_system(
      sc.system.with_perturbations({random_perturbation(sc, BumpMode::kOverlap, magnitude, seed)}));
}

// Fold chart moved by `shift` ambient units along its normal direction.
FoldingManifold shifted(const FoldingManifold& fold, double shift) {
  Chart c = fold.chart();
  c.origin = c.origin.translated(shift * c.rotation.col(c.rotation.cols() - 1));
  return fold.with_chart(c);
}

// Rotates the chart in the plane of its first and last axes.
FoldingManifold tilted(const FoldingManifold& fold, double angle) {
  Chart c = fold.chart();
  const int d = static_cast<int>(c.rotation.cols());
  Mat g = Mat::Identity(d, d);
  g(0, 0) = g(d - 1, d - 1) = std::cos(angle);
  g(0, d - 1) = -std::sin(angle);
  g(d - 1, 0) = std::sin(angle);
  c.rotation = c.rotation * g;
  return fold.with_chart(c);
}

}  // namespace

TEST_CASE("classify") {
  SUBCASE("coincident lines and planes in R^3") {
    Classification a = classify(coord(3, {0}), coord(3, {0}), 3);
    CHECK(a.triple == TangencyClass{2, 1, -1});
    CHECK_FALSE(a.transverse);
    Classification b = classify(coord(3, {0}), coord(3, {0, 1}), 3);
    CHECK(b.triple == TangencyClass{1, 1, 0});
    Classification c = classify(coord(3, {0, 1}), coord(3, {0, 1}), 3);
    CHECK(c.triple == TangencyClass{1, 2, 1});
  }
  SUBCASE("generic position is transverse") {
    Classification t = classify(coord(3, {0, 1}), coord(3, {1, 2}), 3);
    CHECK(t.transverse);
    CHECK(t.triple.c_t == 0);
    CHECK(t.triple.d_t == 1);
    CHECK(t.triple.k_t == 1);
    CHECK(classify(coord(3, {0}), coord(3, {1}), 3).transverse);
  }
  SUBCASE("angles reported and thresholded") {
    Mat m(3, 1);
    m << 1, 1e-4, 0;
    Classification near = classify(coord(3, {0}), Subspace::orthonormalize(m), 3);
    CHECK(near.transverse);
    REQUIRE(near.angles.size() == 1);
    CHECK(near.angles[0] == doctest::Approx(1e-4).epsilon(1e-6));
    CHECK_FALSE(classify(coord(3, {0}), Subspace::orthonormalize(m), 3, 1e-3).transverse);
  }
  SUBCASE("identity c = d - k and mismatch errors") {
    for (int d = 2; d <= 6; ++d)
      for (int a = 1; a < d; ++a)
        for (int b = 1; b < d; ++b) {
          std::vector<int> ia, ib;
          for (int i = 0; i < a; ++i) ia.push_back(i);
          for (int i = 0; i < b; ++i) ib.push_back(d - 1 - i);
          Classification c = classify(coord(d, ia), coord(d, ib), d);
          CHECK(c.triple.c_t == c.triple.d_t - c.triple.k_t);
        }
    CHECK(code_of([] { classify(coord(3, {0}), coord(4, {0}), 3); }) ==
          ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("tangency_residual") {
  SUBCASE("zero at the chart centre by construction") {
    for (auto [ct, s] : {std::pair{1, 1}, {1, 2}, {2, 3}}) {
      Scenario sc = build_scenario(ct, s);
      Vec r = tangency_residual(sc.system, sc.fold, Vec::Zero(sc.k()));
      CHECK(r.size() == s * ct);
      CHECK(r.norm() < 1e-12);
    }
  }
  SUBCASE("closed form over a linear base") {
    // Constant stable bundle: the residual is b(E^s) - A(E^s) t.
    Scenario sc = build_scenario(2, 3);
    FoldingManifold fold = tilted(sc.fold, 0.02);
    FoldLinearSystem lin = fold_linear_system(fold, sc.system.unperturbed_stable_plane());
    for (int i = 0; i < 5; ++i) {
      Vec t = 0.3 * Vec::Random(sc.k());
      Vec expect = lin.b - lin.a * t;
      Vec got = tangency_residual(sc.system, fold, t);
      CHECK(expect.norm() > 1e-3);
      CHECK((got - expect).norm() < 1e-10);
    }
  }
  SUBCASE("translation along the normal") {
    Scenario flat = build_scenario(1, 2);
    // Constant bundle: shifting keeps E^s tangent at the centre.
    for (double delta : {1e-3, 1e-2, 0.1})
      CHECK(tangency_residual(flat.system, shifted(flat.fold, delta), Vec::Zero(2)).norm() <
            1e-12);
    // Varying bundle: the residual moves continuously with the shift.
    Scenario sc = perturbed(1, 2, 1e-2, 3);
    const Vec r0 = tangency_residual(sc.system, sc.fold, Vec::Zero(2));
    double prev = kInfinite;
    for (double delta : {1e-2, 1e-3, 1e-4, 1e-5}) {
      const double change =
          (tangency_residual(sc.system, shifted(sc.fold, delta), Vec::Zero(2)) - r0).norm();
      CHECK(change < prev);
      prev = change;
    }
    CHECK(prev < 1e-5);
  }
  SUBCASE("finite-difference Jacobian is step consistent") {
    Scenario sc = perturbed(1, 2, 1e-2, 5);
    const Vec t = Eigen::Vector2d(0.05, -0.03);
    auto jac = [&](double h) {
      Mat j(2, 2);
      for (int i = 0; i < 2; ++i) {
        Vec e = Vec::Zero(2);
        e[i] = h;
        j.col(i) = (tangency_residual(sc.system, sc.fold, t + e) -
                    tangency_residual(sc.system, sc.fold, t - e)) / (2 * h);
      }
      return j;
    };
    Mat full = jac(1e-6), half = jac(5e-7);
    CHECK((full - half).norm() / full.norm() < 1e-4);
  }
}

TEST_CASE("Newton detector") {
  SUBCASE("unperturbed scenarios") {
    for (auto [ct, s] : {std::pair{1, 1}, {1, 2}, {1, 3}, {2, 3}}) {
      CAPTURE(ct);
      CAPTURE(s);
      Scenario sc = build_scenario(ct, s);
      TangencyReport r = find_tangency_newton(sc.system, sc.fold, Vec::Zero(sc.k()));
      CHECK(r.detector == Detector::kNewton);
      CHECK(r.t_star.norm() == 0.0);
      CHECK(r.residual_norm < 1e-10);
      CHECK(r.iterations <= 1);
      CHECK(r.triple == TangencyClass{ct, s, s - ct});
      CHECK_FALSE(r.transverse);
      CHECK(distance(r.point, sc.fold.embed(r.t_star)) == 0.0);
      CHECK(r.principal_angles.size() == static_cast<std::size_t>(s));
    }
  }
  SUBCASE("perturbed scenario converges near the unperturbed solution") {
    for (double mag : {1e-3, 1e-4}) {
      Scenario sc = perturbed(1, 2, mag, 11);
      TangencyReport r = find_tangency_newton(sc.system, sc.fold, Vec::Zero(2));
      CHECK(r.residual_norm < 1e-9);
      CHECK(r.triple == TangencyClass{1, 2, 1});
      // Model units are 1/scale = 10 ambient units; slope is O(1) per ambient unit.
      CHECK(r.t_star.norm() < 100 * mag);
    }
    Scenario sc = perturbed(2, 3, 1e-3, 2);
    TangencyReport r = find_tangency_newton(sc.system, sc.fold, Vec::Zero(6));
    CHECK(r.residual_norm < 1e-9);
    CHECK(r.triple == TangencyClass{2, 3, 1});
  }
  SUBCASE("tangency outside the patch") {
    // Tilting by atan(3) puts the solution at |t| = 1.5.
    Scenario sc = build_scenario(1, 1);
    FoldingManifold fold = tilted(sc.fold, std::atan(3.0));
    const ErrorCode code =
        code_of([&] { find_tangency_newton(sc.system, fold, Vec::Zero(1)); });
    CHECK((code == ErrorCode::kLeftDomain || code == ErrorCode::kNoConvergence));
  }
  SUBCASE("bit-identical reports") {
    Scenario sc = perturbed(1, 2, 1e-3, 17);
    TangencyReport a = find_tangency_newton(sc.system, sc.fold, Vec::Zero(2));
    TangencyReport b = find_tangency_newton(sc.system, sc.fold, Vec::Zero(2));
    CHECK(a.t_star == b.t_star);
    CHECK(a.residual_norm == b.residual_norm);
    CHECK(a.plane.frame() == b.plane.frame());
    CHECK(a.principal_angles == b.principal_angles);
  }
}

TEST_CASE("sweep detector") {
  Scenario sc = build_scenario(1, 2);
  const LeafFamily leaves = LeafFamily::for_fold(sc.fold);

  SUBCASE("flat leaves: the fold sits at height scale |t|^2") {
    for (int i = 0; i < 20; ++i) {
      Vec t = Vec::Random(2);
      const double expect = sc.fold.chart().scale * t.squaredNorm();
      CHECK(std::abs(leaf_coordinate(sc.system, leaves, sc.fold.embed(t)) - expect) < 1e-14);
    }
  }
  SUBCASE("unperturbed: t-bar = 0") {
    TangencyReport r = find_tangency_sweep(sc.system, sc.fold, leaves);
    CHECK(r.detector == Detector::kSweep);
    REQUIRE(r.leaf_parameter.has_value());
    CHECK(std::abs(*r.leaf_parameter) < 1e-12);
    CHECK(r.residual_norm <= 1e-13);
    CHECK(r.triple == TangencyClass{1, 2, 1});
    CHECK(distance(r.point, sc.fold.embed(Vec::Zero(2))) < 1e-6);
  }
  SUBCASE("sided-ness: no leaf below t-bar, every leaf just above it") {
    // P(tau) is false for tau < 0: the sampled patch never goes below 0.
    for (int i = 0; i < 200; ++i)
      CHECK(leaf_coordinate(sc.system, leaves, sc.fold.embed(Vec::Random(2))) >= 0.0);
    // P(tau) for tau in (0, r'): t = (sqrt(tau / scale), 0) meets leaf tau.
    for (double tau : {1e-8, 1e-4, 1e-2, 0.09}) {
      Vec t = Eigen::Vector2d(std::sqrt(tau / sc.fold.chart().scale), 0.0);
      CHECK(leaf_coordinate(sc.system, leaves, sc.fold.embed(t)) ==
            doctest::Approx(tau).epsilon(1e-12));
    }
  }
  SUBCASE("chart shifted by h along the leaf parameter gives t-bar = h") {
    for (double h : {-0.2, -0.01, 0.003, 0.1}) {
      TangencyReport r = find_tangency_sweep(sc.system, shifted(sc.fold, h), leaves);
      CHECK(*r.leaf_parameter == doctest::Approx(h).epsilon(1e-10));
    }
  }
  SUBCASE("errors") {
    // Narrow family, so shifts stay well inside one torus period.
    LeafFamily narrow = leaves;
    narrow.half_width = 0.05;
    CHECK(code_of([&] { find_tangency_sweep(sc.system, shifted(sc.fold, 0.1), narrow); }) ==
          ErrorCode::kEmptyIntersection);
    CHECK(code_of([&] { find_tangency_sweep(sc.system, shifted(sc.fold, -0.1), narrow); }) ==
          ErrorCode::kLeftDomain);
    Scenario coupled = build_scenario(2, 3);
    LeafFamily any = leaves;
    CHECK(code_of([&] { find_tangency_sweep(coupled.system, coupled.fold, any); }) ==
          ErrorCode::kNotElliptic);
    CHECK(code_of([&] { LeafFamily::for_fold(coupled.fold); }) == ErrorCode::kInvalidArgument);
  }
  SUBCASE("perturbed: both detectors find the same point") {
    for (std::uint64_t seed : {1, 2}) {
      Scenario p = perturbed(1, 2, 1e-3, seed);
      TangencyReport n = find_tangency_newton(p.system, p.fold, Vec::Zero(2));
      TangencyReport w = find_tangency_sweep(p.system, p.fold, LeafFamily::for_fold(p.fold));
      CHECK(distance(n.point, w.point) < 1e-6);
      // Leaf parameter of the Newton point agrees with t-bar.
      CHECK(std::abs(leaf_coordinate(p.system, LeafFamily::for_fold(p.fold), n.point) -
                     *w.leaf_parameter) < 1e-6);
    }
  }
}
