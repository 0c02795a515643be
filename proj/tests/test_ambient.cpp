#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "tangency/ambient.hpp"
#include "tangency/error.hpp"

using namespace tangency;

namespace {

Mat cols(std::initializer_list<std::initializer_list<double>> columns) {
  const int s = static_cast<int>(columns.size());
  const int d = static_cast<int>(columns.begin()->size());
  Mat m(d, s);
  int j = 0;
  for (const auto& c : columns) {
    int i = 0;
    for (double v : c) m(i++, j) = v;
    ++j;
  }
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

Mat random_frame(int d, int s, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat m(d, s);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < s; ++j) m(i, j) = g(rng);
  return m;
}

double orthonormality_defect(const Subspace& e) {
  return (e.frame().transpose() * e.frame() - Mat::Identity(e.dim(), e.dim())).norm();
}

}  // namespace

TEST_CASE("wrap_unit and ambient points") {
  CHECK(wrap_unit(1.25) == doctest::Approx(0.25));
  CHECK(wrap_unit(-0.25) == doctest::Approx(0.75));
  CHECK(wrap_unit(1.0) == 0.0);
  const double tiny = wrap_unit(-1e-18);
  CHECK(tiny >= 0.0);
  CHECK(tiny < 1.0);

  Vec c(3);
  c << 0.3, 1.7, -0.2;
  AmbientPoint p(c, {false, true, true});
  CHECK(p[0] == 0.3);
  CHECK(p[1] == doctest::Approx(0.7));
  CHECK(p[2] == doctest::Approx(0.8));

  Vec a(2), b(2);
  a << 0.0, 0.95;
  b << 0.0, 0.05;
  AmbientPoint pa(a, {false, true}), pb(b, {false, true});
  // Nearest representative across the seam.
  CHECK(displacement(pa, pb)[1] == doctest::Approx(0.1));
  CHECK(distance(pa, pb) == doctest::Approx(0.1));
}

TEST_CASE("orthonormalize") {
  SUBCASE("already orthonormal frame is unchanged") {
    Mat e = cols({{1, 0, 0}, {0, 1, 0}});
    Subspace u = Subspace::orthonormalize(e);
    CHECK((u.frame() - e).norm() == 0.0);
  }
  SUBCASE("full-dimensional frame is rejected") {
    CHECK(code_of([] { Subspace::orthonormalize(cols({{1, 0}, {1, 1}})); }) ==
          ErrorCode::kInvalidDimension);
  }
  SUBCASE("(3,4) normalises to (0.6,0.8)") {
    Subspace u = Subspace::orthonormalize(cols({{3, 4}}));
    CHECK(u.frame()(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(u.frame()(1, 0) == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("rank deficiency") {
    CHECK(code_of([] { Subspace::orthonormalize(cols({{1, 2, 3}, {2, 4, 6}})); }) ==
          ErrorCode::kRankDeficient);
  }
  SUBCASE("random frames stay orthonormal and span the input") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const int d = 2 + trial % 6;
      const int s = 1 + trial % (d - 1);
      Mat raw = random_frame(d, s, rng);
      Subspace u = Subspace::orthonormalize(raw);
      CHECK(orthonormality_defect(u) < 1e-12);
      for (int j = 0; j < s; ++j) CHECK(u.contains(raw.col(j), 1e-10 * raw.col(j).norm()));
    }
  }
}

TEST_CASE("principal angles") {
  Subspace e1 = Subspace::orthonormalize(cols({{1, 0}}));
  Subspace e2 = Subspace::orthonormalize(cols({{0, 1}}));
  Subspace diag = Subspace::orthonormalize(cols({{1, 1}}));

  CHECK(principal_angles(e1, e1).angles == std::vector<double>{0.0});
  CHECK(principal_angles(e1, e2).angles[0] == doctest::Approx(M_PI / 2));
  CHECK(principal_angles(e1, diag).angles[0] == doctest::Approx(M_PI / 4).epsilon(1e-14));

  Subspace p3 = Subspace::coordinate(3, {0});
  CHECK(code_of([&] { principal_angles(e1, p3); }) == ErrorCode::kDimensionMismatch);

  SUBCASE("tiny angles are resolved") {
    const double theta = 1e-11;
    Subspace near = Subspace::orthonormalize(cols({{std::cos(theta), std::sin(theta)}}));
    CHECK(principal_angles(e1, near).angles[0] == doctest::Approx(theta).epsilon(1e-6));
    CHECK(same_subspace(e1, near));
    CHECK_FALSE(same_subspace(e1, diag));
  }

  SUBCASE("symmetric, sorted and within [0, pi/2]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const int d = 3 + trial % 5;
      Subspace u = Subspace::orthonormalize(random_frame(d, 1 + trial % (d - 1), rng));
      Subspace v = Subspace::orthonormalize(random_frame(d, 1 + (trial / 2) % (d - 1), rng));
      auto a = principal_angles(u, v).angles;
      auto b = principal_angles(v, u).angles;
      REQUIRE(a.size() == b.size());
      REQUIRE(a.size() == static_cast<std::size_t>(std::min(u.dim(), v.dim())));
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) < 1e-12);
        CHECK(a[i] >= 0.0);
        CHECK(a[i] <= M_PI / 2);
        if (i > 0) CHECK(a[i] >= a[i - 1]);
      }
    }
  }
}

TEST_CASE("graph norm and cone membership") {
  ConeField cone(Subspace::coordinate(2, {0}), 0.1);
  CHECK(graph_norm(cone.center(), cone) == 0.0);
  CHECK(cone_membership(cone.center(), cone));

  Subspace slope05 = Subspace::orthonormalize(cols({{1, 0.05}}));
  CHECK(graph_norm(slope05, cone) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(cone_membership(slope05, cone));

  Subspace slope2 = Subspace::orthonormalize(cols({{1, 0.2}}));
  CHECK_FALSE(cone_membership(slope2, cone));

  Subspace vertical = Subspace::coordinate(2, {1});
  CHECK(graph_norm(vertical, cone) == kInfinite);
  CHECK_FALSE(cone_membership(vertical, cone));
  CHECK_FALSE(graph_map(vertical, cone).has_value());

  SUBCASE("frame independence and zero graph iff same plane") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 30; ++trial) {
      const int d = 4, s = 2;
      ConeField c(Subspace::orthonormalize(random_frame(d, s, rng)), 0.3);
      Mat l(d - s, s);
      for (int i = 0; i < l.size(); ++i) l.data()[i] = 0.1 * g(rng);
      Subspace e = c.plane_from_graph(l);
      CHECK(orthonormality_defect(e) < 1e-12);
      const double norm = graph_norm(e, c);
      CHECK(norm == doctest::Approx(l.jacobiSvd().singularValues()(0)).epsilon(1e-10));

      // Same plane, different spanning set.
      Mat mix(s, s);
      mix << 2.0, 1.0, -0.5, 3.0;
      Subspace e2 = Subspace::orthonormalize(e.frame() * mix);
      CHECK(std::abs(graph_norm(e2, c) - norm) < 1e-12);
      CHECK(cone_membership(e2, c) == cone_membership(e, c));

      CHECK(graph_norm(c.center(), c) < 1e-15);
      CHECK(principal_angles(c.center(), c.center()).largest() < kDefaultAngleTol);
    }
  }
}

TEST_CASE("subspace helpers") {
  Subspace u = Subspace::coordinate(3, {0, 2});
  Mat comp = u.complement();
  REQUIRE(comp.cols() == 1);
  CHECK(std::abs(std::abs(comp(1, 0)) - 1.0) < 1e-15);
  CHECK((u.projector() - Eigen::Vector3d(1, 0, 1).asDiagonal().toDenseMatrix()).norm() < 1e-15);
  CHECK(u.contains(Eigen::Vector3d(1, 0, 5)));
  CHECK_FALSE(u.contains(Eigen::Vector3d(0, 1, 0)));
}
