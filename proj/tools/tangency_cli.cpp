// Command-line front end over the C interface.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tangency/tangency.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMath = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(tgc_status st) {
  switch (st) {
    case TGC_NO_CONVERGENCE:
    case TGC_OUT_OF_DOMAIN:
    case TGC_SINGULAR_SYSTEM:
    case TGC_LEFT_DOMAIN:
    case TGC_EMPTY_INTERSECTION:
    case TGC_RANK_DEFICIENT:
    case TGC_NOT_A_GRAPH:
      return kExitMath;
    default:
      return kExitUsage;
  }
}

void check(tgc_status st) {
  if (st != TGC_OK) throw Failure{exit_code_for(st), tgc_last_error()};
}

struct CString {
  char* p = nullptr;
  ~CString() { tgc_free_string(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ScenarioHandle {
  tgc_scenario* p = nullptr;
  ~ScenarioHandle() { tgc_scenario_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitUsage, "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Temp file in the target directory, then rename over the destination.
void write_atomic(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Failure{kExitUsage, "cannot create '" + path.parent_path().string() + "'"};
  const fs::path tmp = path.parent_path() /
                       ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{kExitUsage, "cannot write '" + tmp.string() + "'"};
    out << text;
    out.flush();
    if (!out) throw Failure{kExitUsage, "cannot write '" + tmp.string() + "'"};
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Failure{kExitUsage, "cannot move output into '" + path.string() + "'"};
  }
}

std::string config_hash(const Json& config) {
  const std::string bytes = config.dump();
  char out[17];
  tgc_config_hash(bytes.data(), bytes.size(), out);
  return out;
}

Json header(std::uint64_t seed, const Json& config) {
  return Json{{"tool_version", tgc_version()}, {"seed", seed}, {"config_hash", config_hash(config)}};
}

std::string with_header(const std::string& json_text, const Json& head) {
  Json j = Json::parse(json_text);
  j["header"] = head;
  return j.dump(2) + "\n";
}

ScenarioHandle load_scenario(const std::string& path) {
  const std::string text = read_file(path);
  ScenarioHandle h;
  check(tgc_scenario_from_json(text.c_str(), &h.p));
  return h;
}

std::uint64_t scenario_seed(const ScenarioHandle& h) {
  tgc_scenario_info info;
  check(tgc_scenario_info_get(h.p, &info));
  return info.seed;
}

// Values from a --config file fill options not given on the command line.
// Unknown keys are rejected before anything runs.
class ConfigFile {
 public:
  void load(const std::string& path, const std::set<std::string>& allowed) {
    Json j;
    try {
      j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
      throw Failure{kExitUsage, "config '" + path + "': " + e.what()};
    }
    if (!j.is_object()) throw Failure{kExitUsage, "config must be a JSON object"};
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) throw Failure{kExitUsage, "config: unknown key '" + key + "'"};
    }
    values_ = j;
  }

  template <typename T>
  void fill(CLI::Option* opt, const std::string& key, T& target) const {
    if (opt->count() > 0 || !values_.contains(key)) return;
    try {
      target = values_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw Failure{kExitUsage, "config: bad value for '" + key + "'"};
    }
  }

 private:
  Json values_ = Json::object();
};

struct Common {
  std::string out = ".";
  std::string config;
};

void add_common(CLI::App* cmd, Common& c, CLI::Option*& out_opt) {
  out_opt = cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--config", c.config, "JSON file with option values");
}

std::vector<double> parse_ladder(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    try {
      values.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Failure{kExitUsage, "bad ladder entry '" + item + "'"};
  }
  if (values.empty()) throw Failure{kExitUsage, "empty ladder"};
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heteroclinic tangency toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tgc_version()));

  // build
  Common build_c;
  int cT = 0;
  int s = 0;
  std::string kind;
  double alpha = 0.0;
  std::uint64_t build_seed = 0;
  CLI::Option* build_out = nullptr;
  auto* build = app.add_subcommand("build", "Build a scenario");
  add_common(build, build_c, build_out);
  auto* o_ct = build->add_option("--cT", cT, "Tangency codimension");
  auto* o_s = build->add_option("--s", s, "Stable dimension");
  auto* o_kind = build->add_option("--kind", kind, "elliptic|saddle|mixed|coupled");
  auto* o_alpha = build->add_option("--alpha", alpha, "Cone aperture in (0,1)");
  auto* o_bseed = build->add_option("--seed", build_seed, "Scenario seed");

  // verify
  Common verify_c;
  std::string verify_file;
  long long samples = 10000;
  int grid = 21;
  CLI::Option* verify_out = nullptr;
  auto* verify = app.add_subcommand("verify", "Trapping, cone and folding certificates");
  add_common(verify, verify_c, verify_out);
  auto* o_vfile = verify->add_option("scenario", verify_file, "Scenario JSON");
  auto* o_samples = verify->add_option("--samples", samples, "Cone samples");
  auto* o_grid = verify->add_option("--grid", grid, "Folding grid per axis");

  // find
  Common find_c;
  std::string find_file;
  std::string detector = "newton";
  CLI::Option* find_out = nullptr;
  auto* find = app.add_subcommand("find", "Detect the tangency");
  add_common(find, find_c, find_out);
  auto* o_ffile = find->add_option("scenario", find_file, "Scenario JSON");
  auto* o_det = find->add_option("--detector", detector, "newton|sweep|both");

  // robustness
  Common rob_c;
  std::string rob_file;
  std::string ladder_text = "1e-2,3e-3,1e-3,3e-4,1e-4";
  int trials = 100;
  std::uint64_t rob_seed = 0;
  std::string target = "system";
  CLI::Option* rob_out = nullptr;
  auto* rob = app.add_subcommand("robustness", "Persistence under random perturbations");
  add_common(rob, rob_c, rob_out);
  auto* o_rfile = rob->add_option("scenario", rob_file, "Scenario JSON");
  auto* o_ladder = rob->add_option("--ladder", ladder_text, "Comma-separated magnitudes");
  auto* o_trials = rob->add_option("--trials", trials, "Trials per magnitude");
  auto* o_rseed = rob->add_option("--seed", rob_seed, "Run seed");
  auto* o_target = rob->add_option("--target", target, "system|fold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (build->parsed()) {
      ConfigFile cfg;
      if (!build_c.config.empty()) {
        cfg.load(build_c.config, {"cT", "s", "kind", "alpha", "seed", "out"});
      }
      cfg.fill(o_ct, "cT", cT);
      cfg.fill(o_s, "s", s);
      cfg.fill(o_kind, "kind", kind);
      cfg.fill(o_alpha, "alpha", alpha);
      cfg.fill(o_bseed, "seed", build_seed);
      cfg.fill(build_out, "out", build_c.out);
      if (cT == 0 || s == 0) throw Failure{kExitUsage, "build needs --cT and --s"};
      Json config{{"command", "build"}, {"cT", cT}, {"s", s}, {"kind", kind},
                  {"alpha", alpha}, {"seed", build_seed}};
      ScenarioHandle h;
      check(tgc_scenario_build(cT, s, kind.empty() ? nullptr : kind.c_str(), alpha, build_seed,
                               &h.p));
      CString text;
      const std::string head = header(build_seed, config).dump();
      check(tgc_scenario_to_json(h.p, head.c_str(), &text.p));
      write_atomic(fs::path(build_c.out) / "scenario.json", text.str());
      tgc_scenario_info info;
      check(tgc_scenario_info_get(h.p, &info));
      std::cout << "d=" << info.d << " n=" << info.n << " k=" << info.k << " c_T=" << info.c_t
                << " s=" << info.s << " alpha=" << info.alpha << "\n";
      return kExitOk;
    }

    if (verify->parsed()) {
      ConfigFile cfg;
      if (!verify_c.config.empty()) cfg.load(verify_c.config, {"scenario", "samples", "grid", "out"});
      cfg.fill(o_vfile, "scenario", verify_file);
      cfg.fill(o_samples, "samples", samples);
      cfg.fill(o_grid, "grid", grid);
      cfg.fill(verify_out, "out", verify_c.out);
      if (verify_file.empty()) throw Failure{kExitUsage, "verify needs a scenario file"};
      ScenarioHandle h = load_scenario(verify_file);
      tgc_verify_options opts;
      tgc_verify_options_default(&opts);
      opts.cone_samples = samples;
      opts.folding_grid = grid;
      CString text;
      int pass = 0;
      check(tgc_verify(h.p, &opts, &text.p, &pass));
      const std::uint64_t seed = scenario_seed(h);
      Json config{{"command", "verify"}, {"scenario", read_file(verify_file)},
                  {"samples", samples}, {"grid", grid}};
      write_atomic(fs::path(verify_c.out) / "certificates.json",
                   with_header(text.str(), header(seed, config)));
      if (!pass) {
        const Json result = Json::parse(text.str());
        for (const auto& name : result.at("failed")) {
          std::cerr << "certificate failed: " << name.get<std::string>() << "\n";
        }
        return kExitMath;
      }
      return kExitOk;
    }

    if (find->parsed()) {
      ConfigFile cfg;
      if (!find_c.config.empty()) cfg.load(find_c.config, {"scenario", "detector", "out"});
      cfg.fill(o_ffile, "scenario", find_file);
      cfg.fill(o_det, "detector", detector);
      cfg.fill(find_out, "out", find_c.out);
      if (find_file.empty()) throw Failure{kExitUsage, "find needs a scenario file"};
      ScenarioHandle h = load_scenario(find_file);
      CString text;
      check(tgc_find(h.p, detector.c_str(), &text.p));
      Json config{{"command", "find"}, {"scenario", read_file(find_file)}, {"detector", detector}};
      const Json head = header(scenario_seed(h), config);
      const fs::path dir(find_c.out);
      if (detector == "both") {
        const Json all = Json::parse(text.str());
        write_atomic(dir / "tangency_newton.json", with_header(all.at("newton").dump(), head));
        write_atomic(dir / "tangency_sweep.json", with_header(all.at("sweep").dump(), head));
        write_atomic(dir / "agreement.json", with_header(all.at("agreement").dump(), head));
        if (!all.at("agreement").at("agree").get<bool>()) {
          std::cerr << "detectors disagree: distance "
                    << all.at("agreement").at("distance").get<double>() << "\n";
          return kExitMath;
        }
      } else {
        write_atomic(dir / ("tangency_" + detector + ".json"), with_header(text.str(), head));
      }
      return kExitOk;
    }

    if (rob->parsed()) {
      ConfigFile cfg;
      if (!rob_c.config.empty()) {
        cfg.load(rob_c.config, {"scenario", "ladder", "trials", "seed", "target", "out"});
      }
      cfg.fill(o_rfile, "scenario", rob_file);
      cfg.fill(o_ladder, "ladder", ladder_text);
      cfg.fill(o_trials, "trials", trials);
      cfg.fill(o_rseed, "seed", rob_seed);
      cfg.fill(o_target, "target", target);
      cfg.fill(rob_out, "out", rob_c.out);
      if (rob_file.empty()) throw Failure{kExitUsage, "robustness needs a scenario file"};
      if (target != "system" && target != "fold") {
        throw Failure{kExitUsage, "--target must be system or fold"};
      }
      const std::vector<double> ladder = parse_ladder(ladder_text);
      ScenarioHandle h = load_scenario(rob_file);
      tgc_robustness_options opts;
      tgc_robustness_options_default(&opts);
      opts.ladder = ladder.data();
      opts.ladder_len = ladder.size();
      opts.trials = trials;
      opts.seed = rob_seed;
      opts.target = target == "fold" ? TGC_TARGET_FOLD : TGC_TARGET_SYSTEM;
      CString csv;
      CString summary;
      check(tgc_robustness(h.p, &opts, &csv.p, &summary.p));
      Json config{{"command", "robustness"}, {"scenario", read_file(rob_file)},
                  {"ladder", ladder}, {"trials", trials}, {"seed", rob_seed}, {"target", target}};
      const Json head = header(rob_seed, config);
      const fs::path dir(rob_c.out);
      std::string csv_text = "# tool_version=" + head.at("tool_version").get<std::string>() +
                             " seed=" + std::to_string(rob_seed) +
                             " config_hash=" + head.at("config_hash").get<std::string>() + "\n" +
                             csv.str();
      write_atomic(dir / "stats.csv", csv_text);
      write_atomic(dir / "summary.json", with_header(summary.str(), head));
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
