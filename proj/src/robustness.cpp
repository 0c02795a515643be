#include "tangency/robustness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "tangency/error.hpp"

namespace tangency {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kAgreementDistance = 1e-6;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vec unit_gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

MagnitudeLadder MagnitudeLadder::defaults() {
  return MagnitudeLadder{{1e-2, 3e-3, 1e-3, 3e-4, 1e-4}};
}

void MagnitudeLadder::validate() const {
  if (magnitudes.empty()) throw Error(ErrorCode::kInvalidArgument, "empty magnitude ladder");
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    const double m = magnitudes[i];
    const bool last = i + 1 == magnitudes.size();
    if (!std::isfinite(m) || m < 0.0 || (m == 0.0 && !last)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ladder magnitudes must be positive (a final 0 is allowed)");
    }
    if (i > 0 && !(m < magnitudes[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "ladder must be strictly decreasing");
    }
  }
}

MagnitudeLadder MagnitudeLadder::parse(const std::string& comma_list) {
  MagnitudeLadder ladder;
  std::stringstream in(comma_list);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used == 0 || used != item.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad ladder entry '" + item + "'");
    }
    ladder.magnitudes.push_back(v);
  }
  ladder.validate();
  return ladder;
}

const char* to_string(BumpMode m) { return m == BumpMode::kOverlap ? "overlap" : "remote"; }

const char* to_string(ExperimentTarget t) {
  return t == ExperimentTarget::kSystem ? "system" : "fold";
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t magnitude_index, int trial) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(magnitude_index));
  return splitmix64(h ^ static_cast<std::uint64_t>(trial));
}

BumpPerturbation random_perturbation(const Scenario& sc, BumpMode mode, double magnitude,
                                     std::uint64_t seed, double radius) {
  if (!(magnitude >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "magnitude must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ScenarioSystem& sys = sc.system;
  const AmbientPoint anchor = sc.fold.chart().origin;
  const int d = sys.dim();

  std::optional<AmbientPoint> center;
  if (mode == BumpMode::kOverlap) {
    const Vec offset = unit_gaussian(d, rng) * (0.5 * radius * unit(rng));
    center = anchor.translated(offset);
  } else {
    const auto& surgery = sys.base().surgery();
    for (int attempt = 0; attempt < 10000 && !center; ++attempt) {
      Vec c(d);
      for (int i = 0; i < d; ++i) {
        c[i] = i < sys.box_dims() ? sys.epsilon() * (unit(rng) - 0.5) : unit(rng);
      }
      AmbientPoint p = sys.point(c);
      if (distance(p, anchor) < 2.0 * radius) continue;
      if (surgery) {
        Vec delta = p.coords().tail(2) - surgery->center;
        for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] -= std::floor(delta[i] + 0.5);
        if (delta.norm() < surgery->rho + radius) continue;
      }
      center = p;
    }
    if (!center) throw Error(ErrorCode::kInvalidArgument, "no room for a remote bump");
  }
  const Vec direction = unit_gaussian(d, rng);
  const double capped = std::min(magnitude, sc.max_perturbation);
  return BumpPerturbation::with_c1_size(*center, radius, direction, capped);
}

FoldPerturbation random_fold_perturbation(int k, int codim, double magnitude,
                                          std::uint64_t seed) {
  if (!(magnitude >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "magnitude must be >= 0");
  FoldPerturbation p = FoldPerturbation::zero(k, codim);
  if (magnitude == 0.0) return p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int l = 0; l < codim; ++l) {
    p.constant[l] = gauss(rng);
    for (int i = 0; i < k; ++i) p.linear(l, i) = gauss(rng);
    Mat& q = p.quadratic[static_cast<std::size_t>(l)];
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) q(i, j) = q(j, i) = gauss(rng);
    }
  }
  const double scale = magnitude / p.c1_size(k);
  p.constant *= scale;
  p.linear *= scale;
  for (auto& q : p.quadratic) q *= scale;
  return p;
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TANGENCY_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 256L));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

struct TrialOutcome {
  TrialRecord newton;
  std::optional<TrialRecord> sweep;
};

template <typename Task>
void run_parallel(std::size_t count, int threads, const Task& task) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Baseline {
  Vec newton_t;
  std::optional<Vec> sweep_t;
};

bool wants_sweep(const Scenario& sc, const RobustnessOptions& opts) {
  return opts.sweep && sc.fold.kind() == FoldKind::kElliptic && sc.fold.codim() == 1;
}

Baseline find_baseline(const Scenario& sc, bool sweep) {
  const TangencyReport base =
      find_tangency_newton(sc.system, sc.fold, Vec::Zero(sc.fold.k()));
  if (!(base.residual_norm < 1e-10)) {
    throw Error(ErrorCode::kNoConvergence, "unperturbed tangency residual above 1e-10");
  }
  Baseline b{base.t_star, std::nullopt};
  if (sweep) {
    b.sweep_t = find_tangency_sweep(sc.system, sc.fold, LeafFamily::for_fold(sc.fold)).t_star;
  }
  return b;
}

TrialOutcome run_detectors(const ScenarioSystem& sys, const FoldingManifold& fold,
                           const std::optional<LeafFamily>& leaves, const Baseline& base, bool sweep,
                           TrialRecord proto) {
  TrialOutcome out;
  std::optional<AmbientPoint> newton_point;
  out.newton = proto;
  out.newton.detector = Detector::kNewton;
  try {
    const TangencyReport r = find_tangency_newton(sys, fold, base.newton_t);
    out.newton.success = true;
    out.newton.residual = r.residual_norm;
    out.newton.displacement = (r.t_star - base.newton_t).norm();
    newton_point = r.point;
  } catch (const Error& e) {
    out.newton.success = false;
    out.newton.residual = kNaN;
    out.newton.displacement = kNaN;
    out.newton.error = to_string(e.code());
  }
  if (!sweep) return out;
  TrialRecord sw = proto;
  sw.detector = Detector::kSweep;
  try {
    const TangencyReport r = find_tangency_sweep(sys, fold, *leaves);
    sw.success = true;
    sw.residual = r.residual_norm;
    sw.displacement = (r.t_star - *base.sweep_t).norm();
    if (newton_point) {
      const bool agree = distance(*newton_point, r.point) < kAgreementDistance;
      sw.agreement = agree;
      out.newton.agreement = agree;
    }
  } catch (const Error& e) {
    sw.success = false;
    sw.residual = kNaN;
    sw.displacement = kNaN;
    sw.error = to_string(e.code());
  }
  out.sweep = sw;
  return out;
}

RobustnessResult summarise(RobustnessResult result, const std::vector<TrialOutcome>& outcomes) {
  const auto& mags = result.ladder.magnitudes;
  result.stats.assign(mags.size(), PersistenceStats{});
  double num = 0.0;
  double den = 0.0;
  for (std::size_t mi = 0; mi < mags.size(); ++mi) {
    PersistenceStats& st = result.stats[mi];
    st.magnitude = mags[mi];
    st.trials = result.trials;
    for (int t = 0; t < result.trials; ++t) {
      const TrialOutcome& o = outcomes[mi * static_cast<std::size_t>(result.trials) +
                                       static_cast<std::size_t>(t)];
      result.records.push_back(o.newton);
      if (o.newton.certificate_pass && !*o.newton.certificate_pass) ++st.certificate_failures;
      if (o.newton.success) {
        ++st.successes;
        st.max_residual = std::max(st.max_residual, o.newton.residual);
        st.displacement.push_back(o.newton.displacement);
        num += st.magnitude * o.newton.displacement;
        den += st.magnitude * st.magnitude;
      }
      if (o.sweep) {
        result.records.push_back(*o.sweep);
        ++st.sweep_trials;
        if (o.sweep->success) ++st.sweep_successes;
        if (o.sweep->agreement && *o.sweep->agreement) ++st.agreements;
      }
    }
  }
  result.displacement_slope = den > 0.0 ? num / den : 0.0;
  for (std::size_t mi = 0; mi < mags.size(); ++mi) {
    PersistenceStats& st = result.stats[mi];
    st.displacement_slope = result.displacement_slope;
    for (double disp : st.displacement) {
      if (disp > 3.0 * result.displacement_slope * st.magnitude) ++result.envelope_violations;
    }
    // Ladder is decreasing, so success must not drop as we move along it.
    if (mi > 0 && st.success_rate() < result.stats[mi - 1].success_rate()) {
      result.monotone_success = false;
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "success rate %.17g at magnitude %.17g below %.17g at magnitude %.17g",
                    st.success_rate(), st.magnitude, result.stats[mi - 1].success_rate(),
                    result.stats[mi - 1].magnitude);
      result.violations.emplace_back(buf);
    }
  }
  return result;
}

}  // namespace

RobustnessResult persistence_experiment(const Scenario& sc, const MagnitudeLadder& ladder,
                                        int trials, std::uint64_t seed,
                                        const RobustnessOptions& opts) {
  ladder.validate();
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  const bool sweep = wants_sweep(sc, opts);
  const Baseline base = find_baseline(sc, sweep);
  const std::optional<LeafFamily> leaves =
      sweep ? std::optional<LeafFamily>(LeafFamily::for_fold(sc.fold)) : std::nullopt;
  const std::size_t count = ladder.magnitudes.size() * static_cast<std::size_t>(trials);
  std::vector<TrialOutcome> outcomes(count);
  run_parallel(count, resolve_thread_count(opts.threads), [&](std::size_t idx) {
    const std::size_t mi = idx / static_cast<std::size_t>(trials);
    const int t = static_cast<int>(idx % static_cast<std::size_t>(trials));
    TrialRecord proto;
    proto.magnitude = ladder.magnitudes[mi];
    proto.trial = t;
    proto.seed = trial_seed(seed, mi, t);
    proto.mode = t % 2 == 0 ? BumpMode::kOverlap : BumpMode::kRemote;
    const BumpPerturbation bump =
        random_perturbation(sc, proto.mode, proto.magnitude, proto.seed, opts.bump_radius);
    const ScenarioSystem perturbed = sc.system.with_perturbations({bump});
    outcomes[idx] = run_detectors(perturbed, sc.fold, leaves, base, sweep, proto);
  });
  RobustnessResult result;
  result.target = ExperimentTarget::kSystem;
  result.seed = seed;
  result.trials = trials;
  result.ladder = ladder;
  result.baseline_t = base.newton_t;
  return summarise(std::move(result), outcomes);
}

RobustnessResult fold_perturbation_experiment(const Scenario& sc,
                                              const MagnitudeLadder& ladder, int trials,
                                              std::uint64_t seed,
                                              const RobustnessOptions& opts) {
  ladder.validate();
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  const bool sweep = wants_sweep(sc, opts);
  const Baseline base = find_baseline(sc, sweep);
  const std::optional<LeafFamily> leaves =
      sweep ? std::optional<LeafFamily>(LeafFamily::for_fold(sc.fold)) : std::nullopt;
  const std::size_t count = ladder.magnitudes.size() * static_cast<std::size_t>(trials);
  std::vector<TrialOutcome> outcomes(count);
  run_parallel(count, resolve_thread_count(opts.threads), [&](std::size_t idx) {
    const std::size_t mi = idx / static_cast<std::size_t>(trials);
    const int t = static_cast<int>(idx % static_cast<std::size_t>(trials));
    TrialRecord proto;
    proto.magnitude = ladder.magnitudes[mi];
    proto.trial = t;
    proto.seed = trial_seed(seed, mi, t);
    const FoldPerturbation p =
        random_fold_perturbation(sc.fold.k(), sc.fold.codim(), proto.magnitude, proto.seed);
    const FoldingManifold fold = sc.fold.with_perturbation(p);
    const FoldingCertificate cert =
        verify_folding(fold, fold.cone(sc.alpha), opts.certificate_grid, proto.seed);
    proto.certificate_pass = cert.pass;
    outcomes[idx] = run_detectors(sc.system, fold, leaves,
                                  base, sweep, proto);
    if (outcomes[idx].sweep) outcomes[idx].sweep->certificate_pass = cert.pass;
  });
  RobustnessResult result;
  result.target = ExperimentTarget::kFold;
  result.seed = seed;
  result.trials = trials;
  result.ladder = ladder;
  result.baseline_t = base.newton_t;
  result = summarise(std::move(result), outcomes);

  // Escalation order, scanning magnitudes from small to large.
  for (auto it = result.stats.rbegin(); it != result.stats.rend(); ++it) {
    if (!result.first_certificate_failure && it->certificate_failures > 0) {
      result.first_certificate_failure = it->magnitude;
    }
    const bool detector_failed =
        it->successes < it->trials || it->sweep_successes < it->sweep_trials;
    if (!result.first_detector_failure && detector_failed) {
      result.first_detector_failure = it->magnitude;
    }
  }
  if (result.first_detector_failure) {
    result.certificate_precedes_detector =
        result.first_certificate_failure &&
        *result.first_certificate_failure <= *result.first_detector_failure;
    if (!result.certificate_precedes_detector) {
      result.violations.emplace_back("detector failed before the folding certificate");
    }
  }
  return result;
}

std::string stats_csv(const RobustnessResult& r) {
  std::string out = "magnitude,trial,seed,detector,success,residual,displacement,detector_agreement\n";
  char buf[512];
  auto num = [](double v) {
    char b[40];
    if (std::isnan(v)) return std::string("nan");
    std::snprintf(b, sizeof b, "%.17g", v);
    return std::string(b);
  };
  for (const TrialRecord& rec : r.records) {
    std::snprintf(buf, sizeof buf, "%s,%d,%llu,%s,%d,%s,%s,%s\n", num(rec.magnitude).c_str(),
                  rec.trial, static_cast<unsigned long long>(rec.seed), to_string(rec.detector),
                  rec.success ? 1 : 0, num(rec.residual).c_str(), num(rec.displacement).c_str(),
                  rec.agreement ? (*rec.agreement ? "1" : "0") : "");
    out += buf;
  }
  return out;
}

}  // namespace tangency
