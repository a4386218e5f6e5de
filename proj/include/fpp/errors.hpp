#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fpp {

/// A caller-side contract was broken (bad argument, unmet precondition).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An internal invariant failed; indicates a bug, not bad input.
class LogicError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Lattice coordinates left the representable range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A run hit its configured step cap.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(std::uint64_t cap)
      : std::runtime_error("step cap exceeded: max_steps=" + std::to_string(cap)),
        cap_(cap) {}

  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t cap_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A growth trace violates its structural invariants (e.g. Y_j <= 0).
class CorruptTraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fpp
