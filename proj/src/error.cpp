#include "tangency/error.hpp"

namespace tangency {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidDimension: return "InvalidDimension";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kNotAGraph: return "NotAGraph";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNoSuchAutomorphism: return "NoSuchAutomorphism";
    case ErrorCode::kLeftDomain: return "LeftDomain";
    case ErrorCode::kEmptyIntersection: return "EmptyIntersection";
    case ErrorCode::kNotElliptic: return "NotElliptic";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

}  // namespace tangency
