#ifndef FORMULAB_ERRORS_HPP_
#define FORMULAB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace formulab {

// A caller broke a precondition on an internal interface (e.g. an adapter
// passed an out-of-range voltage to the plant, or step() after episode end).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The integrator received or produced a non-finite state.
class NonFiniteState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad config file or inconsistent experiment matrix.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failure (unwritable output directory, missing run logs).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace formulab

#endif  // FORMULAB_ERRORS_HPP_
