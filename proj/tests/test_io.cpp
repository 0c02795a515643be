#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "tangency/error.hpp"
#include "tangency/io.hpp"

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

Scenario decorated() {
  Scenario sc = build_scenario(1, 2, std::nullopt, std::nullopt, 1234);
  BumpPerturbation bump = random_perturbation(sc, BumpMode::kOverlap, 1e-3, 8);
  FoldPerturbation fp = random_fold_perturbation(sc.k(), 1, 1e-3, 9);
  return sc.with_system(sc.system.with_perturbations({bump})).with_fold(sc.fold.with_perturbation(fp));
}

}  // namespace

TEST_CASE("hash and header") {
  // Published FNV-1a 64-bit test vectors.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
  Json h = artifact_header(7, "abc");
  CHECK(h.at("tool_version") == kToolVersion);
  CHECK(h.at("seed") == 7);
  CHECK(h.at("config_hash") == "abc");
}

TEST_CASE("scenario round trip is bit-exact") {
  for (const Scenario& sc :
       {decorated(), build_scenario(1, 1), build_scenario(2, 3), build_scenario(2, 3, FoldKind::kMixed),
        build_scenario(1, 3, FoldKind::kSaddle, 0.02, 5)}) {
    const std::string text = to_json(sc).dump();
    Scenario back = scenario_from_json(parse_json(text));
    CHECK(to_json(back).dump() == text);
    CHECK(back.seed == sc.seed);
    CHECK(back.alpha == sc.alpha);
    CHECK(back.max_perturbation == sc.max_perturbation);
    // Same dynamics and fold, bit for bit.
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      AmbientPoint x = sample_domain_point(sc.system, rng);
      REQUIRE(back.system.apply(x).coords() == sc.system.apply(x).coords());
      REQUIRE(back.system.differential(x) == sc.system.differential(x));
    }
    Vec t = Vec::Constant(sc.k(), 0.3);
    CHECK(back.fold.embed(t).coords() == sc.fold.embed(t).coords());
  }
}

TEST_CASE("floats survive text exactly") {
  Scenario sc = build_scenario(1, 2);
  sc.alpha = 0.1 + 0.2;  // 0.30000000000000004
  Scenario back = scenario_from_json(parse_json(to_json(sc).dump()));
  CHECK(back.alpha == sc.alpha);
}

TEST_CASE("strict scenario parsing") {
  const Json good = to_json(build_scenario(1, 2));
  SUBCASE("optional header is accepted") {
    Json j = good;
    j["header"] = artifact_header(0, "x");
    CHECK_NOTHROW(scenario_from_json(j));
  }
  SUBCASE("unknown top-level key") {
    Json j = good;
    j["colour"] = "blue";
    CHECK(code_of([&] { scenario_from_json(j); }) == ErrorCode::kParse);
  }
  SUBCASE("unknown nested key") {
    Json j = good;
    j["fold"]["chart"]["skew"] = 1;
    CHECK(code_of([&] { scenario_from_json(j); }) == ErrorCode::kParse);
  }
  SUBCASE("missing key") {
    Json j = good;
    j.erase("alpha");
    CHECK(code_of([&] { scenario_from_json(j); }) == ErrorCode::kParse);
  }
  SUBCASE("wrong type") {
    Json j = good;
    j["d"] = "three";
    CHECK(code_of([&] { scenario_from_json(j); }) == ErrorCode::kParse);
  }
  SUBCASE("inconsistent dimensions") {
    Json j = good;
    j["d"] = 4;
    CHECK_THROWS_AS(scenario_from_json(j), Error);
  }
  SUBCASE("wrong format tag") {
    Json j = good;
    j["format"] = "something-else";
    CHECK(code_of([&] { scenario_from_json(j); }) == ErrorCode::kParse);
  }
  SUBCASE("syntax errors") {
    CHECK(code_of([] { parse_json("{\"d\": 3,"); }) == ErrorCode::kParse);
  }
}

TEST_CASE("certificate and report round trips") {
  Scenario sc = decorated();
  ConeCertificate cone = verify_cone_invariance(sc.system, sc.cone(), 200, 3);
  CHECK(to_json(cone_certificate_from_json(to_json(cone))).dump() == to_json(cone).dump());

  FoldingCertificate fold = verify_folding(sc.fold, sc.cone(), 5);
  CHECK(to_json(folding_certificate_from_json(to_json(fold))).dump() == to_json(fold).dump());

  TangencyReport rep = find_tangency_newton(sc.system, sc.fold, Vec::Zero(sc.k()));
  const std::string text = to_json(rep).dump();
  TangencyReport back = tangency_report_from_json(parse_json(text));
  CHECK(to_json(back).dump() == text);

  Json extra = to_json(cone);
  extra["note"] = 1;
  CHECK(code_of([&] { cone_certificate_from_json(extra); }) == ErrorCode::kParse);
  Json bad_det = to_json(rep);
  bad_det["detector"] = "guess";
  CHECK(code_of([&] { tangency_report_from_json(bad_det); }) == ErrorCode::kParse);
}

TEST_CASE("report and summary fields") {
  Scenario sc = build_scenario(1, 2);
  TangencyReport rep = find_tangency_newton(sc.system, sc.fold, Vec::Zero(2));
  Json j = to_json(rep);
  CHECK(j.at("class") == Json{{"cT", 1}, {"dT", 2}, {"kT", 1}});
  CHECK(j.at("detector") == "newton");
  CHECK(j.at("leaf_parameter").is_null());

  RobustnessOptions opts;
  opts.threads = 1;
  opts.sweep = false;
  RobustnessResult r = persistence_experiment(sc, MagnitudeLadder{{1e-3, 1e-4}}, 2, 5, opts);
  Json s = summary_json(r);
  REQUIRE(s.at("magnitudes").size() == 2);
  CHECK(s.at("magnitudes")[0].at("magnitude") == 1e-3);
  CHECK(s.at("magnitudes")[0].at("success_rate") == 1.0);
  CHECK(s.at("displacement_slope").get<double>() == r.displacement_slope);
  CHECK(s.at("target") == "system");
}
