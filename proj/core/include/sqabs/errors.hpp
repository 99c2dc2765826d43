#pragma once

#include <stdexcept>
#include <string>

namespace sqabs {

/// Malformed or truncated input file (bad magic, version, payload size).
class format_error : public std::runtime_error {
public:
  explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level read/write failure.
class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input data violates a documented precondition (e.g. non-watertight mesh).
class data_error : public std::runtime_error {
public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A domain object fails its invariants.
class validation_error : public std::runtime_error {
public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sqabs
