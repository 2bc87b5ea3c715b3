#pragma once

#include <stdexcept>
#include <string>

namespace lrtk {

// Error taxonomy. The CLI maps invalid_input/format/unsupported to exit
// code 2 and numerical_error to exit code 3.

struct invalid_input_error : std::runtime_error {
  explicit invalid_input_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct domain_box_error : std::runtime_error {
  explicit domain_box_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct format_error : std::runtime_error {
  explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct unsupported_error : std::runtime_error {
  explicit unsupported_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace lrtk
