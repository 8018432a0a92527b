#pragma once

#include <stdexcept>
#include <string>

namespace posi {

// Error taxonomy mirrors the CLI exit-code contract:
//   argument_error   -> exit 2 (bad flags, invalid parameter combinations)
//   data_error       -> exit 3 (unreadable/ill-formed/non-finite input data)
//   capability_error -> exit 4 (request exceeds enumeration caps or work budgets)
struct argument_error : std::invalid_argument {
  explicit argument_error(const std::string& msg) : std::invalid_argument(msg) {}
};

struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct capability_error : std::runtime_error {
  explicit capability_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace posi
