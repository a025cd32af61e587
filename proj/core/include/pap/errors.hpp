#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pap {

/// Invalid user-supplied parameter or configuration.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unreadable tensor/checkpoint file.
class IoError : public std::runtime_error {
 public:
  enum class Kind {
    open_failed,
    bad_magic,
    bad_version,
    bad_dtype,
    bad_rank,
    truncated,
    non_finite,
  };

  IoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Non-finite value encountered during an iterative optimization.
class IterationError : public std::runtime_error {
 public:
  explicit IterationError(const std::string& what) : std::runtime_error(what) {}
};

/// Training diverged (NaN loss).
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace pap
