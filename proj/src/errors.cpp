#include "evfuse/errors.hpp"

namespace evfuse {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidEvidence: return "invalid-evidence";
    case ErrorKind::kDegenerateOpinion: return "degenerate-opinion";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kTotalConflict: return "total-conflict";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kStratification: return "stratification";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kUndefinedAuc: return "undefined-auc";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace evfuse
