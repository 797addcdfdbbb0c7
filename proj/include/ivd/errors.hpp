#pragma once

#include <stdexcept>
#include <string>

namespace ivd {

// Malformed user input: unknown names, bad files, inconsistent configs.
struct input_error : std::invalid_argument {
  explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

// A computation that cannot proceed: singular systems, non-convergence,
// failed model generation.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ivd
