#pragma once

#include <stdexcept>
#include <string>

namespace uep {

// Invalid argument values or configuration (bad ranges, size mismatches).
class ParameterError : public std::invalid_argument {
  public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Structurally valid input whose content is corrupt or self-contradictory.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// File and stream failures.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A problem instance with no feasible solution (QoS beyond source ceiling,
// unreachable constraint set).
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace uep
