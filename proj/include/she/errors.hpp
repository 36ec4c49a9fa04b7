#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace she {

/// Bad configuration or parameter outside its admissible range.
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A structural invariant was violated at runtime (mismatched grids,
/// unordered initial data, missing records). CLI exit code 4.
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A solver produced a non-finite value. Carries where it happened.
/// CLI exit code 3.
class BlowupError : public std::runtime_error {
public:
    BlowupError(std::int64_t step, std::int64_t node, double t, double x)
        : std::runtime_error("blow-up at step " + std::to_string(step) +
                             " node " + std::to_string(node) +
                             " (t=" + std::to_string(t) + ", x=" + std::to_string(x) + ")"),
          step(step), node(node), t(t), x(x) {}

    std::int64_t step;
    std::int64_t node;
    double t;
    double x;
};

} // namespace she
