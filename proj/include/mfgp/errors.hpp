// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfgp {

// Violated precondition or argument contract (dimension mismatches, bad
// level indices, invalid configuration).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed input files, unparsable datasets, schema mismatches.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Covariance factorization failed even after exhausting the jitter ladder.
class NumericalSingularity : public std::runtime_error {
 public:
  NumericalSingularity(const std::string& msg, std::vector<double> ladder)
      : std::runtime_error(msg), jitter_ladder(std::move(ladder)) {}
  std::vector<double> jitter_ladder;
};

// Every optimizer restart failed; carries per-restart diagnostics in what().
class TrainingFailure : public std::runtime_error {
 public:
  explicit TrainingFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// A metric is undefined for the given inputs (e.g. zero response variance).
class MetricUndefined : public std::runtime_error {
 public:
  explicit MetricUndefined(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mfgp
