#include "causal/error.hpp"

namespace causal {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Config: return "config";
    case ErrorKind::Arm: return "arm";
    case ErrorKind::Positivity: return "positivity";
    case ErrorKind::Separation: return "separation";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Fold: return "fold";
    case ErrorKind::Cell: return "cell";
    case ErrorKind::Bandwidth: return "bandwidth";
    case ErrorKind::Identification: return "identification";
    case ErrorKind::Support: return "support";
    case ErrorKind::Evaluability: return "evaluability";
    case ErrorKind::Epsilon: return "epsilon";
    case ErrorKind::EmptyMatch: return "empty-match";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

}  // namespace causal
