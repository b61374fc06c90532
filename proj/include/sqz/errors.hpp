#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace sqz {

/// Bad input: malformed parameters, mismatched dimensions, invalid configs.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a result that cannot be trusted (overflow, negative
/// intensity, truncation alarm, dead trajectory).
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

/// Compact scientific rendering for diagnostics.
inline std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

}  // namespace sqz
