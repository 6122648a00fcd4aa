#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace causal {

enum class ErrorKind {
  Usage,          // bad CLI or configuration input
  Schema,         // CSV columns missing or duplicated
  Parse,          // a cell could not be read as a number
  Validation,     // a type invariant was violated
  Config,         // a generator or estimator configuration is invalid
  Arm,            // a treatment arm required by the estimator is empty
  Positivity,     // a propensity or conditioning mass is outside (0, 1)
  Separation,     // logistic MLE does not exist
  Rank,           // a least-squares design is rank deficient
  Fold,           // a cross-fitting training complement lacks an arm
  Cell,           // a DID cell is empty
  Bandwidth,      // too few points inside an RD window
  Identification, // the data carry no identifying variation
  Support,        // measure domination or support mismatch
  Evaluability,   // a functional is undefined at a measure
  Epsilon,        // perturbation step leaves the probability simplex
  EmptyMatch,     // matching produced zero pairs
  InsufficientData,
  Numerical,      // a numerical routine failed
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Structured error thrown by every module. The kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace causal
