#pragma once

#include <stdexcept>
#include <string>

namespace ewopt {

// Raised for invalid inputs, malformed files, and unsolvable systems.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ewopt
