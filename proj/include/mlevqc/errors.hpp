#pragma once

#include <stdexcept>
#include <string>

namespace mlevqc {

inline constexpr const char *kVersion = "0.1.0";

/// A request exceeds a structural or compute budget (non-extensive depth
/// cap, dense-operator qubit limit, ...). Argument errors use
/// std::invalid_argument.
class capacity_error : public std::length_error {
  public:
    using std::length_error::length_error;
};

} // namespace mlevqc
