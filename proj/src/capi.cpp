#include "tangency/tangency.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "tangency/error.hpp"
#include "tangency/io.hpp"

using namespace tangency;

struct tgc_scenario {
  Scenario scenario;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tgc_status fail(tgc_status st, const std::string& what) {
  g_last_error = what;
  return st;
}

template <typename Body>
tgc_status guarded(Body&& body) {
  try {
    g_last_error.clear();
    body();
    return TGC_OK;
  } catch (const Error& e) {
    return fail(static_cast<tgc_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TGC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TGC_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace

extern "C" {

const char* tgc_version(void) { return kToolVersion; }

const char* tgc_last_error(void) { return g_last_error.c_str(); }

const char* tgc_status_name(tgc_status status) {
  if (status == TGC_OK) return "Ok";
  if (status == TGC_INTERNAL) return "Internal";
  if (status >= TGC_INVALID_ARGUMENT && status <= TGC_PARSE) {
    return to_string(static_cast<ErrorCode>(status));
  }
  return "Unknown";
}

void tgc_free_string(char* s) { std::free(s); }

void tgc_config_hash(const char* bytes, size_t len, char out[17]) {
  if (!out) return;
  const std::string h = fnv1a_hex(bytes ? std::string(bytes, len) : std::string());
  std::memcpy(out, h.c_str(), 17);
}

void tgc_verify_options_default(tgc_verify_options* opts) {
  if (!opts) return;
  opts->cone_samples = 10000;
  opts->folding_grid = 21;
  opts->trapping_grid = 11;
}

void tgc_robustness_options_default(tgc_robustness_options* opts) {
  if (!opts) return;
  opts->ladder = nullptr;
  opts->ladder_len = 0;
  opts->trials = 100;
  opts->seed = 0;
  opts->threads = 0;
  opts->target = TGC_TARGET_SYSTEM;
}

tgc_status tgc_scenario_build(int c_t, int s, const char* kind, double alpha, uint64_t seed,
                              tgc_scenario** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    *out = nullptr;
    std::optional<FoldKind> k;
    if (kind) k = parse_fold_kind(kind);
    std::optional<double> a;
    if (alpha > 0.0) a = alpha;
    *out = new tgc_scenario{build_scenario(c_t, s, k, a, seed)};
  });
}

tgc_status tgc_scenario_from_json(const char* json, tgc_scenario** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "arguments must not be NULL");
    *out = nullptr;
    *out = new tgc_scenario{scenario_from_json(parse_json(json))};
  });
}

tgc_status tgc_scenario_to_json(const tgc_scenario* sc, const char* header_json,
                                char** out_json) {
  return guarded([&] {
    require(sc != nullptr && out_json != nullptr, "arguments must not be NULL");
    *out_json = nullptr;
    Json j = to_json(sc->scenario);
    if (header_json) j["header"] = parse_json(header_json);
    *out_json = dup_string(j.dump(2) + "\n");
  });
}

tgc_status tgc_scenario_info_get(const tgc_scenario* sc, tgc_scenario_info* out) {
  return guarded([&] {
    require(sc != nullptr && out != nullptr, "arguments must not be NULL");
    const Scenario& s = sc->scenario;
    *out = tgc_scenario_info{s.d(), s.n(), s.k(), s.c_t, s.s, s.alpha, s.seed};
  });
}

void tgc_scenario_free(tgc_scenario* sc) { delete sc; }

tgc_status tgc_verify(const tgc_scenario* sc, const tgc_verify_options* opts, char** out_json,
                      int* all_pass) {
  return guarded([&] {
    require(sc != nullptr && out_json != nullptr && all_pass != nullptr,
            "arguments must not be NULL");
    *out_json = nullptr;
    tgc_verify_options o;
    tgc_verify_options_default(&o);
    if (opts) o = *opts;
    require(o.cone_samples >= 1 && o.folding_grid >= 2 && o.trapping_grid >= 2,
            "verify options out of range");
    const Scenario& s = sc->scenario;
    const TrappingReport trap = verify_trapping(s.system, o.trapping_grid);
    const ConeCertificate cone = verify_cone_invariance(s.system, s.cone(), o.cone_samples, s.seed);
    const FoldingCertificate folding = verify_folding(s.fold, s.cone(), o.folding_grid, s.seed);
    Json failed = Json::array();
    if (!trap.pass) failed.push_back("trapping");
    if (!cone.pass) failed.push_back("cone");
    if (!folding.pass) failed.push_back("folding");
    Json j{{"trapping", to_json(trap)},
           {"cone", to_json(cone)},
           {"folding", to_json(folding)},
           {"pass", failed.empty()},
           {"failed", failed}};
    *all_pass = failed.empty() ? 1 : 0;
    *out_json = dup_string(j.dump(2) + "\n");
  });
}

tgc_status tgc_find(const tgc_scenario* sc, const char* detector, char** out_json) {
  return guarded([&] {
    require(sc != nullptr && detector != nullptr && out_json != nullptr,
            "arguments must not be NULL");
    *out_json = nullptr;
    const std::string det = detector;
    require(det == "newton" || det == "sweep" || det == "both",
            "detector must be newton, sweep or both");
    const Scenario& s = sc->scenario;
    auto sweep = [&] {
      return find_tangency_sweep(s.system, s.fold, LeafFamily::for_fold(s.fold));
    };
    if (det != "newton" && (s.fold.kind() != FoldKind::kElliptic || s.fold.codim() != 1)) {
      throw Error(ErrorCode::kNotElliptic, "the sweep detector needs an elliptic c_T = 1 fold");
    }
    Json j;
    if (det == "both") {
      const TangencyReport n = find_tangency_newton(s.system, s.fold, Vec::Zero(s.k()));
      const TangencyReport w = sweep();
      const double dist = distance(n.point, w.point);
      j = Json{{"newton", to_json(n)},
               {"sweep", to_json(w)},
               {"agreement", Json{{"distance", dist}, {"tolerance", 1e-6}, {"agree", dist < 1e-6}}}};
    } else if (det == "newton") {
      j = to_json(find_tangency_newton(s.system, s.fold, Vec::Zero(s.k())));
    } else {
      j = to_json(sweep());
    }
    *out_json = dup_string(j.dump(2) + "\n");
  });
}

tgc_status tgc_robustness(const tgc_scenario* sc, const tgc_robustness_options* opts,
                          char** out_csv, char** out_summary_json) {
  return guarded([&] {
    require(sc != nullptr && opts != nullptr && out_csv != nullptr &&
                out_summary_json != nullptr,
            "arguments must not be NULL");
    *out_csv = nullptr;
    *out_summary_json = nullptr;
    MagnitudeLadder ladder = MagnitudeLadder::defaults();
    if (opts->ladder) {
      ladder.magnitudes.assign(opts->ladder, opts->ladder + opts->ladder_len);
    }
    ladder.validate();
    require(opts->trials >= 1, "trials must be >= 1");
    require(opts->target == TGC_TARGET_SYSTEM || opts->target == TGC_TARGET_FOLD,
            "unknown robustness target");
    RobustnessOptions ro;
    ro.threads = opts->threads;
    const RobustnessResult r =
        opts->target == TGC_TARGET_SYSTEM
            ? persistence_experiment(sc->scenario, ladder, opts->trials, opts->seed, ro)
            : fold_perturbation_experiment(sc->scenario, ladder, opts->trials, opts->seed, ro);
    const std::string csv = stats_csv(r);
    const std::string summary = summary_json(r).dump(2) + "\n";
    *out_csv = dup_string(csv);
    *out_summary_json = dup_string(summary);
  });
}

tgc_status tgc_classify(const double* tu, int tu_dim, const double* ts, int ts_dim, int d,
                        double angle_tol, int* transverse, int triple[3]) {
  return guarded([&] {
    require(tu != nullptr && ts != nullptr && transverse != nullptr && triple != nullptr,
            "arguments must not be NULL");
    require(d >= 2 && tu_dim >= 1 && ts_dim >= 1, "dimensions out of range");
    const Mat u = Eigen::Map<const Mat>(tu, d, tu_dim);
    const Mat v = Eigen::Map<const Mat>(ts, d, ts_dim);
    const Classification c = classify(Subspace::orthonormalize(u), Subspace::orthonormalize(v),
                                      d, angle_tol > 0.0 ? angle_tol : kClassifyAngleTol);
    *transverse = c.transverse ? 1 : 0;
    triple[0] = c.triple.c_t;
    triple[1] = c.triple.d_t;
    triple[2] = c.triple.k_t;
  });
}

}  // extern "C"
