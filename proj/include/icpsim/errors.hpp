#pragma once

#include <stdexcept>
#include <string>

namespace icpsim {

// Precondition violated: bad parameter, geometry too small, uncovered index.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A search or scan found nothing inside the requested range.
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Memory/event budget exceeded.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace icpsim
