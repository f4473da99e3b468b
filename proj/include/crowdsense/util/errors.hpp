#pragma once

#include <stdexcept>
#include <string>

namespace crowdsense {

/// Precondition violated on an otherwise well-typed input (empty path, Q = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed external input: JSON files, CSV rows, config files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdsense
