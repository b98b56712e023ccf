#pragma once

#include <stdexcept>
#include <string>

namespace asymbpe {

// Thrown for every contract violation the toolkit detects (bad input files,
// infeasible plans, malformed configs). The message names the offending item.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace asymbpe
