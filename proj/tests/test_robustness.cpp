#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "tangency/error.hpp"
#include "tangency/robustness.hpp"

using namespace tangency;

namespace {

bool same_records(const RobustnessResult& a, const RobustnessResult& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const TrialRecord& x = a.records[i];
    const TrialRecord& y = b.records[i];
    auto eq = [](double u, double v) { return (std::isnan(u) && std::isnan(v)) || u == v; };
    if (x.seed != y.seed || x.success != y.success || !eq(x.residual, y.residual) ||
        !eq(x.displacement, y.displacement) || x.agreement != y.agreement)
      return false;
  }
  return true;
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("magnitude ladder") {
  CHECK(MagnitudeLadder::defaults().magnitudes == std::vector<double>{1e-2, 3e-3, 1e-3, 3e-4, 1e-4});
  CHECK(MagnitudeLadder::parse("1e-2,3e-3, 1e-3").magnitudes ==
        std::vector<double>{1e-2, 3e-3, 1e-3});
  CHECK(MagnitudeLadder::parse("1e-3,0").magnitudes == std::vector<double>{1e-3, 0.0});
  for (const char* bad : {"", "1e-3,1e-2", "1e-3,1e-3", "0,1e-3", "-1e-3", "abc", "1e-3,,1e-4",
                          "1e-3x", "nan"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(MagnitudeLadder::parse(bad), Error);
  }
}

TEST_CASE("random perturbations") {
  Scenario sc = build_scenario(1, 2);
  SUBCASE("same seed, same bump") {
    BumpPerturbation a = random_perturbation(sc, BumpMode::kOverlap, 1e-3, 99);
    BumpPerturbation b = random_perturbation(sc, BumpMode::kOverlap, 1e-3, 99);
    CHECK(a.center().coords() == b.center().coords());
    CHECK(a.amplitude() == b.amplitude());
    CHECK(a.c1_bound() == b.c1_bound());
    BumpPerturbation c = random_perturbation(sc, BumpMode::kOverlap, 1e-3, 100);
    CHECK(c.center().coords() != a.center().coords());
  }
  SUBCASE("magnitude 0 is the unperturbed system") {
    BumpPerturbation z = random_perturbation(sc, BumpMode::kOverlap, 0.0, 1);
    CHECK(z.amplitude().isZero(0.0));
    ScenarioSystem g = sc.system.with_perturbations({z});
    const AmbientPoint x = sc.fold.chart().origin;
    CHECK(g.apply(x).coords() == sc.system.apply(x).coords());
    CHECK(g.differential(x) == sc.system.differential(x));
  }
  SUBCASE("C1 size within the requested magnitude") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      BumpPerturbation b = random_perturbation(sc, BumpMode::kOverlap, 1e-3, seed);
      CHECK(b.c1_bound() <= 1e-3 * (1 + 1e-12));
      // Sampled sup of |v| + |Dv| on a ball around the centre.
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g;
      double sup = 0.0;
      for (int i = 0; i < 3000; ++i) {
        Vec dir(3);
        for (int j = 0; j < 3; ++j) dir[j] = g(rng);
        dir *= b.radius() * std::pow((i + 0.5) / 3000.0, 1.0 / 3.0) / dir.norm();
        AmbientPoint x = b.center().translated(dir);
        sup = std::max(sup, b.displacement(x).norm() + b.jacobian(x).norm());
      }
      CHECK(sup <= 1e-3);
    }
  }
  SUBCASE("magnitudes are capped to keep a diffeomorphism") {
    BumpPerturbation b = random_perturbation(sc, BumpMode::kOverlap, 10.0, 3);
    CHECK(b.c1_bound() <= sc.max_perturbation * (1 + 1e-12));
  }
  SUBCASE("placement modes") {
    const AmbientPoint anchor = sc.fold.chart().origin;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      BumpPerturbation o = random_perturbation(sc, BumpMode::kOverlap, 1e-3, seed);
      CHECK(distance(o.center(), anchor) <= 0.5 * o.radius() + 1e-15);
      BumpPerturbation r = random_perturbation(sc, BumpMode::kRemote, 1e-3, seed);
      CHECK(distance(r.center(), anchor) >= 2 * r.radius());
      CHECK(std::abs(r.center()[0]) <= 0.5 * sc.system.epsilon());
      // Clear of the surgery disc around the fixed point (0, 0).
      Vec at_fixed = r.center().coords();
      at_fixed.tail(2).setZero();
      CHECK(distance(r.center(), sc.system.point(at_fixed)) >= 0.15 + r.radius());
    }
  }
}

TEST_CASE("random fold perturbations") {
  FoldPerturbation p = random_fold_perturbation(3, 1, 1e-3, 5);
  CHECK(p.c1_size(3) == doctest::Approx(1e-3).epsilon(1e-12));
  FoldPerturbation q = random_fold_perturbation(3, 1, 1e-3, 5);
  CHECK(p.constant == q.constant);
  CHECK(p.linear == q.linear);
  CHECK(p.quadratic[0] == q.quadratic[0]);
  CHECK(random_fold_perturbation(6, 2, 0.0, 5).is_zero());
}

TEST_CASE("trial seeds") {
  std::set<std::uint64_t> seen;
  for (std::size_t m = 0; m < 5; ++m)
    for (int t = 0; t < 100; ++t) seen.insert(trial_seed(42, m, t));
  CHECK(seen.size() == 500);
  CHECK(trial_seed(42, 1, 2) == trial_seed(42, 1, 2));
  CHECK(trial_seed(42, 1, 2) != trial_seed(43, 1, 2));
}

TEST_CASE("persistence experiment") {
  Scenario sc = build_scenario(1, 1);
  const MagnitudeLadder ladder{{1e-3, 1e-4, 0.0}};
  RobustnessOptions one;
  one.threads = 1;
  RobustnessResult r = persistence_experiment(sc, ladder, 4, 7, one);

  REQUIRE(r.stats.size() == 3);
  CHECK(r.records.size() == 3 * 4 * 2);  // both detectors
  for (const PersistenceStats& st : r.stats) {
    CHECK(st.successes == st.trials);
    CHECK(st.sweep_successes == st.sweep_trials);
    CHECK(st.agreements == st.sweep_trials);
    CHECK(st.displacement.size() == static_cast<std::size_t>(st.successes));
  }
  // Zero magnitude reproduces the unperturbed detection exactly.
  for (double disp : r.stats[2].displacement) CHECK(disp == 0.0);
  CHECK(r.monotone_success);

  SUBCASE("slope and envelope from the records") {
    double num = 0.0, den = 0.0;
    for (const TrialRecord& rec : r.records) {
      if (rec.detector != Detector::kNewton || !rec.success) continue;
      num += rec.magnitude * rec.displacement;
      den += rec.magnitude * rec.magnitude;
    }
    CHECK(r.displacement_slope == doctest::Approx(num / den).epsilon(1e-12));
    CHECK(std::isfinite(r.displacement_slope));
    int outside = 0;
    for (const TrialRecord& rec : r.records)
      if (rec.detector == Detector::kNewton && rec.success &&
          rec.displacement > 3 * r.displacement_slope * rec.magnitude)
        ++outside;
    CHECK(r.envelope_violations == outside);
  }
  SUBCASE("thread count does not change the result") {
    RobustnessOptions three;
    three.threads = 3;
    RobustnessResult again = persistence_experiment(sc, ladder, 4, 7, three);
    CHECK(same_records(r, again));
    CHECK(stats_csv(r) == stats_csv(again));
  }
  SUBCASE("CSV layout") {
    const std::string csv = stats_csv(r);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "magnitude,trial,seed,detector,success,residual,displacement,detector_agreement");
    CHECK(count_lines(csv) == 1 + 24);
    std::string row;
    std::getline(in, row);
    CHECK(row.rfind("0.001,0,", 0) == 0);
  }
  SUBCASE("Newton only on non-elliptic scenarios") {
    Scenario coupled = build_scenario(2, 3);
    RobustnessResult c = persistence_experiment(coupled, MagnitudeLadder{{1e-3}}, 3, 1, one);
    CHECK(c.records.size() == 3);
    CHECK(c.stats[0].successes == 3);
    CHECK(c.stats[0].sweep_trials == 0);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(persistence_experiment(sc, ladder, 0, 7, one), Error);
    CHECK_THROWS_AS(persistence_experiment(sc, MagnitudeLadder{{1e-4, 1e-3}}, 1, 7, one), Error);
  }
}

TEST_CASE("fold perturbation experiment") {
  Scenario sc = build_scenario(1, 1);
  RobustnessOptions one;
  one.threads = 1;

  SUBCASE("zero perturbation leaves the report unchanged") {
    RobustnessResult r = fold_perturbation_experiment(sc, MagnitudeLadder{{0.0}}, 2, 3, one);
    for (const TrialRecord& rec : r.records) {
      CHECK(rec.success);
      CHECK(rec.displacement == 0.0);
      CHECK(rec.certificate_pass.value_or(false));
    }
  }
  SUBCASE("quadratic coefficient 1 + delta keeps the tangency at the centre") {
    // Unperturbed constant bundle: b(E^s) = 0 for any Hessian, so t* stays 0.
    Scenario s2 = build_scenario(1, 2);
    FoldPerturbation p = FoldPerturbation::zero(2, 1);
    p.quadratic[0](0, 0) = 2e-3;  // t_1^2 -> (1 + 1e-3) t_1^2
    FoldingManifold fold = s2.fold.with_perturbation(p);
    TangencyReport r = find_tangency_newton(s2.system, fold, Vec::Zero(2));
    CHECK(r.t_star.norm() < 1e-12);
    // With a perturbed system the shift is O(delta).
    Scenario pert = s2.with_system(
        s2.system.with_perturbations({random_perturbation(s2, BumpMode::kOverlap, 1e-3, 4)}));
    TangencyReport base = find_tangency_newton(pert.system, s2.fold, Vec::Zero(2));
    TangencyReport moved = find_tangency_newton(pert.system, fold, base.t_star);
    CHECK((moved.t_star - base.t_star).norm() < 1e-2 * 1e-3 + 1e-3 * base.t_star.norm());
  }
  SUBCASE("escalation: certificate failure precedes detector failure") {
    RobustnessResult r =
        fold_perturbation_experiment(sc, MagnitudeLadder{{8.0, 2.0, 0.5, 1e-3}}, 4, 11, one);
    CHECK(r.target == ExperimentTarget::kFold);
    CHECK(r.certificate_precedes_detector);
    REQUIRE(r.first_certificate_failure.has_value());
    CHECK(*r.first_certificate_failure > 1e-3);
    // Small magnitudes: certified and detected.
    CHECK(r.stats.back().certificate_failures == 0);
    CHECK(r.stats.back().successes == r.stats.back().trials);
  }
}
