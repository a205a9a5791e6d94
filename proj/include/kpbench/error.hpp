#pragma once

#include <stdexcept>
#include <string>

namespace kpbench {

// Structured pipeline error. Everything user-facing (bad CSV row, shape
// mismatch, truncated weight file) throws this; the CLI maps it to exit 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kpbench
