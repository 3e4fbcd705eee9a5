#pragma once

#include <stdexcept>
#include <string>

namespace procqx {

/// Bad user input: malformed files, schema violations, out-of-range values.
/// The CLI maps this to exit code 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace procqx
