#pragma once

#include <stdexcept>
#include <string>

namespace timetrail {

// Input that violates a documented precondition (bad CSV row, bad config
// value, schema mismatch). The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failures: missing input, unwritable output. Exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace timetrail
