#pragma once

#include <stdexcept>
#include <string>

namespace maxscore {

// Bad inputs: out-of-range parameters, malformed data, shape mismatches.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or unwritable files.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

enum class Side { upper, lower };

inline const char* side_name(Side s) { return s == Side::upper ? "upper" : "lower"; }

} // namespace maxscore
