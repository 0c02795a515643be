#include "tangency/io.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "tangency/error.hpp"

namespace tangency {

namespace {

constexpr const char* kScenarioFormat = "tangency-scenario";

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::kParse, what); }

void check_keys(const Json& j, const std::set<std::string>& required,
                const std::set<std::string>& optional, const std::string& where) {
  if (!j.is_object()) parse_error(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!required.count(key) && !optional.count(key)) {
      parse_error(where + ": unknown key '" + key + "'");
    }
  }
  for (const auto& key : required) {
    if (!j.contains(key)) parse_error(where + ": missing key '" + key + "'");
  }
}

double get_double(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number()) parse_error("'" + key + "' must be a number");
  return v.get<double>();
}

int get_int(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer()) parse_error("'" + key + "' must be an integer");
  return v.get<int>();
}

bool get_bool(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_boolean()) parse_error("'" + key + "' must be a boolean");
  return v.get<bool>();
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from(const Json& j, const std::string& what) {
  if (!j.is_array()) parse_error(what + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) parse_error(what + " entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Mat mat_from(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) parse_error(what + " must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    Vec row = vec_from(j[i], what + " row");
    if (static_cast<std::size_t>(row.size()) != cols) parse_error(what + " rows differ in length");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::vector<bool> mask_from(const Json& j) {
  if (!j.is_array()) parse_error("'periodic' must be an array");
  std::vector<bool> mask;
  for (const auto& v : j) {
    if (!v.is_boolean()) parse_error("'periodic' entries must be booleans");
    mask.push_back(v.get<bool>());
  }
  return mask;
}

Json fold_perturbation_json(const FoldPerturbation& p) {
  Json q = Json::array();
  for (const Mat& m : p.quadratic) q.push_back(mat_json(m));
  return Json{{"constant", vec_json(p.constant)},
              {"linear", mat_json(p.linear)},
              {"quadratic", q}};
}

FoldPerturbation fold_perturbation_from(const Json& j, int k, int codim) {
  check_keys(j, {"constant", "linear", "quadratic"}, {}, "fold.perturbation");
  FoldPerturbation p;
  p.constant = vec_from(j.at("constant"), "perturbation constant");
  p.linear = mat_from(j.at("linear"), "perturbation linear");
  const Json& q = j.at("quadratic");
  if (!q.is_array()) parse_error("perturbation quadratic must be an array");
  for (const auto& m : q) p.quadratic.push_back(mat_from(m, "perturbation quadratic"));
  if (p.constant.size() != codim || p.linear.rows() != codim || p.linear.cols() != k ||
      static_cast<int>(p.quadratic.size()) != codim) {
    parse_error("fold perturbation has the wrong shape");
  }
  for (const Mat& m : p.quadratic) {
    if (m.rows() != k || m.cols() != k) parse_error("fold perturbation quadratic must be k x k");
  }
  return p;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json artifact_header(std::uint64_t seed, const std::string& config_hash) {
  return Json{{"tool_version", kToolVersion}, {"seed", seed}, {"config_hash", config_hash}};
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    parse_error(std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Json to_json(const Scenario& sc) {
  const ScenarioSystem& sys = sc.system;
  Json base = Json::array();
  for (const auto& row : sys.base().automorphism().integer_matrix()) base.push_back(row);
  Json surgery = nullptr;
  if (const auto& sg = sys.base().surgery()) {
    surgery = Json{{"center", vec_json(sg->center)}, {"rho", sg->rho}, {"mu", sg->mu}};
  }
  const FoldingManifold& fold = sc.fold;
  Json chart{{"origin", vec_json(fold.chart().origin.coords())},
             {"rotation", mat_json(fold.chart().rotation)},
             {"scale", fold.chart().scale}};
  Json bumps = Json::array();
  for (const auto& b : sys.perturbations()) {
    bumps.push_back(Json{{"center", vec_json(b.center().coords())},
                         {"radius", b.radius()},
                         {"amplitude", vec_json(b.amplitude())},
                         {"c1_bound", b.c1_bound()}});
  }
  return Json{
      {"format", kScenarioFormat},
      {"d", sc.d()},
      {"n", sc.n()},
      {"c_T", sc.c_t},
      {"s", sc.s},
      {"epsilon", sys.epsilon()},
      {"lambda", vec_json(sys.lambda())},
      {"base_matrix", base},
      {"surgery", surgery},
      {"fold",
       Json{{"kind", to_string(fold.kind())},
            {"k", fold.k()},
            {"codim", fold.codim()},
            {"chart", chart},
            {"perturbation", fold.perturbation() ? fold_perturbation_json(*fold.perturbation())
                                                 : Json(nullptr)}}},
      {"perturbations", bumps},
      {"alpha", sc.alpha},
      {"max_perturbation", sc.max_perturbation},
      {"seed", sc.seed},
  };
}

Scenario scenario_from_json(const Json& j) {
  try {
    check_keys(j,
               {"format", "d", "n", "c_T", "s", "epsilon", "lambda", "base_matrix", "surgery",
                "fold", "perturbations", "alpha", "max_perturbation", "seed"},
               {"header"}, "scenario");
    if (j.at("format") != kScenarioFormat) parse_error("scenario: unexpected format tag");
    const int d = get_int(j, "d");
    const int n = get_int(j, "n");
    const int c_t = get_int(j, "c_T");
    const int s = get_int(j, "s");
    if (c_t < 1 || s < 1) parse_error("scenario: c_T and s must be >= 1");
    if (d != (c_t == 1 ? s + 1 : c_t * (s + 1))) parse_error("scenario: d inconsistent with c_T, s");
    if (n != d - s + 1) parse_error("scenario: n must equal d - s + 1");

    const Json& bm = j.at("base_matrix");
    if (!bm.is_array() || static_cast<int>(bm.size()) != n) {
      parse_error("scenario: base_matrix must be n x n");
    }
    IntMatrix base;
    for (const auto& row : bm) {
      if (!row.is_array() || static_cast<int>(row.size()) != n) {
        parse_error("scenario: base_matrix must be n x n");
      }
      std::vector<long long> r;
      for (const auto& v : row) {
        if (!v.is_number_integer()) parse_error("scenario: base_matrix entries must be integers");
        r.push_back(v.get<long long>());
      }
      base.push_back(std::move(r));
    }
    std::optional<DASurgery> surgery;
    if (!j.at("surgery").is_null()) {
      const Json& sg = j.at("surgery");
      check_keys(sg, {"center", "rho", "mu"}, {}, "surgery");
      surgery = DASurgery{vec_from(sg.at("center"), "surgery center"), get_double(sg, "rho"),
                          get_double(sg, "mu")};
      if (n != 2 || surgery->center.size() != 2) parse_error("surgery needs a 2-torus");
      if (!(surgery->rho > 0.0) || !(surgery->rho < 0.5)) parse_error("surgery rho out of range");
    }
    const Vec lambda = vec_from(j.at("lambda"), "lambda");
    if (lambda.size() != d - n) parse_error("scenario: lambda must have d - n entries");
    ScenarioSystem system(lambda, BaseMap(ToralAutomorphism(base), surgery),
                          get_double(j, "epsilon"));

    std::vector<BumpPerturbation> bumps;
    const Json& pj = j.at("perturbations");
    if (!pj.is_array()) parse_error("scenario: perturbations must be an array");
    for (const auto& b : pj) {
      check_keys(b, {"center", "radius", "amplitude", "c1_bound"}, {}, "perturbation");
      const Vec c = vec_from(b.at("center"), "perturbation center");
      if (c.size() != d) parse_error("perturbation center must have d entries");
      bumps.emplace_back(system.point(c), get_double(b, "radius"),
                         vec_from(b.at("amplitude"), "perturbation amplitude"),
                         get_double(b, "c1_bound"));
    }
    if (!bumps.empty()) system = system.with_perturbations(std::move(bumps));

    const Json& fj = j.at("fold");
    check_keys(fj, {"kind", "k", "codim", "chart", "perturbation"}, {}, "fold");
    if (!fj.at("kind").is_string()) parse_error("fold.kind must be a string");
    const FoldKind kind = parse_fold_kind(fj.at("kind").get<std::string>());
    const int k = get_int(fj, "k");
    const int codim = get_int(fj, "codim");
    const Json& cj = fj.at("chart");
    check_keys(cj, {"origin", "rotation", "scale"}, {}, "fold.chart");
    const Vec origin = vec_from(cj.at("origin"), "chart origin");
    if (origin.size() != d) parse_error("chart origin must have d entries");
    Chart chart{system.point(origin), mat_from(cj.at("rotation"), "chart rotation"),
                get_double(cj, "scale")};
    std::optional<FoldPerturbation> fp;
    if (!fj.at("perturbation").is_null()) fp = fold_perturbation_from(fj.at("perturbation"), k, codim);
    FoldingManifold fold(kind, s, codim, std::move(chart), std::move(fp));
    if (fold.k() != k) parse_error("fold.k inconsistent with kind, s and codim");
    if (fold.ambient_dim() != d) parse_error("fold dimension does not match d");

    const double alpha = get_double(j, "alpha");
    if (!(alpha > 0.0 && alpha < 1.0)) parse_error("alpha must lie in (0, 1)");
    const Json& seed = j.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      parse_error("seed must be a non-negative integer");
    }
    return Scenario{c_t, s, std::move(system), std::move(fold), alpha,
                    seed.get<std::uint64_t>(), get_double(j, "max_perturbation")};
  } catch (const Json::exception& e) {
    parse_error(std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    parse_error(std::string("scenario: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Json to_json(const TrappingReport& r) {
  return Json{{"pass", r.pass},
              {"margin", r.margin ? Json(*r.margin) : Json(nullptr)},
              {"samples", r.samples},
              {"box_dims", r.box_dims}};
}

Json to_json(const ConeCertificate& c) {
  return Json{{"alpha", c.alpha},
              {"samples", c.samples},
              {"max_ratio", c.max_ratio},
              {"pass", c.pass},
              {"seed", c.seed}};
}

ConeCertificate cone_certificate_from_json(const Json& j) {
  try {
    check_keys(j, {"alpha", "samples", "max_ratio", "pass", "seed"}, {}, "cone certificate");
    ConeCertificate c;
    c.alpha = get_double(j, "alpha");
    c.samples = j.at("samples").get<long long>();
    c.max_ratio = get_double(j, "max_ratio");
    c.pass = get_bool(j, "pass");
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const Json::exception& e) {
    parse_error(std::string("cone certificate: ") + e.what());
  }
}

Json to_json(const FoldingCertificate& c) {
  return Json{{"kind", to_string(c.kind)},
              {"k", c.k},
              {"s", c.s},
              {"c_T", c.codim},
              {"alpha", c.alpha},
              {"grid", c.grid},
              {"samples", c.samples},
              {"tensor_grid", c.tensor_grid},
              {"max_residual", c.max_residual},
              {"unique", c.unique},
              {"max_start_spread", c.max_start_spread},
              {"continuity_modulus", c.continuity_modulus},
              {"out_of_domain", c.out_of_domain},
              {"singular", c.singular},
              {"pass", c.pass}};
}

FoldingCertificate folding_certificate_from_json(const Json& j) {
  try {
    check_keys(j,
               {"kind", "k", "s", "c_T", "alpha", "grid", "samples", "tensor_grid",
                "max_residual", "unique", "max_start_spread", "continuity_modulus",
                "out_of_domain", "singular", "pass"},
               {}, "folding certificate");
    FoldingCertificate c;
    c.kind = parse_fold_kind(j.at("kind").get<std::string>());
    c.k = get_int(j, "k");
    c.s = get_int(j, "s");
    c.codim = get_int(j, "c_T");
    c.alpha = get_double(j, "alpha");
    c.grid = get_int(j, "grid");
    c.samples = j.at("samples").get<long long>();
    c.tensor_grid = get_bool(j, "tensor_grid");
    c.max_residual = get_double(j, "max_residual");
    c.unique = get_bool(j, "unique");
    c.max_start_spread = get_double(j, "max_start_spread");
    c.continuity_modulus = get_double(j, "continuity_modulus");
    c.out_of_domain = j.at("out_of_domain").get<long long>();
    c.singular = j.at("singular").get<long long>();
    c.pass = get_bool(j, "pass");
    return c;
  } catch (const Json::exception& e) {
    parse_error(std::string("folding certificate: ") + e.what());
  }
}

Json to_json(const TangencyReport& r) {
  Json mask = Json::array();
  for (bool b : r.point.periodic()) mask.push_back(b);
  return Json{{"detector", to_string(r.detector)},
              {"t_star", vec_json(r.t_star)},
              {"point", vec_json(r.point.coords())},
              {"periodic", mask},
              {"plane", mat_json(r.plane.frame())},
              {"class", Json{{"cT", r.triple.c_t}, {"dT", r.triple.d_t}, {"kT", r.triple.k_t}}},
              {"transverse", r.transverse},
              {"residual_norm", r.residual_norm},
              {"principal_angles", r.principal_angles},
              {"iterations", r.iterations},
              {"leaf_parameter", r.leaf_parameter ? Json(*r.leaf_parameter) : Json(nullptr)}};
}

TangencyReport tangency_report_from_json(const Json& j) {
  try {
    check_keys(j,
               {"detector", "t_star", "point", "periodic", "plane", "class", "transverse",
                "residual_norm", "principal_angles", "iterations", "leaf_parameter"},
               {}, "tangency report");
    const std::string det = j.at("detector").get<std::string>();
    if (det != "newton" && det != "sweep") parse_error("unknown detector '" + det + "'");
    const Json& cls = j.at("class");
    check_keys(cls, {"cT", "dT", "kT"}, {}, "class");
    AmbientPoint point(vec_from(j.at("point"), "point"), mask_from(j.at("periodic")));
    const Mat frame = mat_from(j.at("plane"), "plane");
    std::optional<Subspace> plane;
    try {
      plane = Subspace::from_orthonormal(frame);
    } catch (const Error& e) {
      parse_error(std::string("tangency report plane: ") + e.what());
    }
    TangencyReport r{det == "newton" ? Detector::kNewton : Detector::kSweep,
                     vec_from(j.at("t_star"), "t_star"),
                     std::move(point),
                     std::move(*plane),
                     TangencyClass{get_int(cls, "cT"), get_int(cls, "dT"), get_int(cls, "kT")},
                     get_bool(j, "transverse"),
                     j.at("principal_angles").get<std::vector<double>>(),
                     get_double(j, "residual_norm"),
                     get_int(j, "iterations"),
                     std::nullopt};
    if (!j.at("leaf_parameter").is_null()) r.leaf_parameter = get_double(j, "leaf_parameter");
    return r;
  } catch (const Json::exception& e) {
    parse_error(std::string("tangency report: ") + e.what());
  }
}

Json summary_json(const RobustnessResult& r) {
  Json rows = Json::array();
  for (const PersistenceStats& st : r.stats) {
    double max_disp = 0.0;
    for (double v : st.displacement) max_disp = std::max(max_disp, v);
    rows.push_back(Json{{"magnitude", st.magnitude},
                        {"trials", st.trials},
                        {"successes", st.successes},
                        {"success_rate", st.success_rate()},
                        {"max_residual", st.max_residual},
                        {"displacement", st.displacement},
                        {"max_displacement", max_disp},
                        {"sweep_trials", st.sweep_trials},
                        {"sweep_successes", st.sweep_successes},
                        {"agreements", st.agreements},
                        {"certificate_failures", st.certificate_failures}});
  }
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"target", to_string(r.target)},
              {"seed", r.seed},
              {"trials", r.trials},
              {"ladder", r.ladder.magnitudes},
              {"baseline_t_star", vec_json(r.baseline_t)},
              {"magnitudes", rows},
              {"displacement_slope", nullable(r.displacement_slope)},
              {"monotone_success", r.monotone_success},
              {"envelope_violations", r.envelope_violations},
              {"violations", r.violations},
              {"first_certificate_failure", opt(r.first_certificate_failure)},
              {"first_detector_failure", opt(r.first_detector_failure)},
              {"certificate_precedes_detector", r.certificate_precedes_detector}};
}

}  // namespace tangency
