#pragma once

// JSON and CSV forms of scenarios, certificates, reports and experiment
// summaries. Parsers are strict: unknown or missing keys raise kParse.

#include <cstdint>
#include <string>

#include "json.hpp"
#include "tangency/cocycle.hpp"
#include "tangency/detect.hpp"
#include "tangency/folding.hpp"
#include "tangency/robustness.hpp"
#include "tangency/scenario.hpp"

namespace tangency {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// {tool_version, seed, config_hash}
Json artifact_header(std::uint64_t seed, const std::string& config_hash);

Json to_json(const Scenario& sc);
/// Accepts an optional "header" key, which is ignored.
Scenario scenario_from_json(const Json& j);

Json to_json(const TrappingReport& r);
Json to_json(const ConeCertificate& c);
ConeCertificate cone_certificate_from_json(const Json& j);
Json to_json(const FoldingCertificate& c);
FoldingCertificate folding_certificate_from_json(const Json& j);
Json to_json(const TangencyReport& r);
TangencyReport tangency_report_from_json(const Json& j);
Json summary_json(const RobustnessResult& r);

/// Parses text, mapping syntax errors to kParse.
Json parse_json(const std::string& text);

}  // namespace tangency
