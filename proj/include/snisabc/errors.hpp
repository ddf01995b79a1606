#pragma once

#include <stdexcept>
#include <string>

namespace snisabc {

// Caller passed something that violates a precondition: wrong shape,
// non-finite values, malformed spec.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

class EmptyBatch : public InvalidInput {
 public:
  explicit EmptyBatch(const std::string& what) : InvalidInput(what) {}
};

// Not enough data for the requested operation (jackknife on n < 2,
// sampler exhausted, n > pool size without replacement, ...).
class InsufficientSamples : public std::runtime_error {
 public:
  explicit InsufficientSamples(const std::string& what) : std::runtime_error(what) {}
};

// One weight carries essentially the whole softmax mass; leave-one-out
// denominators 1 - alpha_i are no longer trustworthy.
class DominatedWeight : public std::runtime_error {
 public:
  explicit DominatedWeight(const std::string& what) : std::runtime_error(what) {}
};

// An experiment could not complete (e.g. retry cap exhausted).
class ExperimentError : public std::runtime_error {
 public:
  explicit ExperimentError(const std::string& what) : std::runtime_error(what) {}
};

// Bad CLI usage or config file; maps to process exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace snisabc
