#pragma once

#include <stdexcept>
#include <string>

namespace qrw {

/// Exit code classes used by the CLI. Library code throws the matching
/// exception type; the CLI maps them to process exit codes.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    config = 3,
    data = 4,
    numeric = 5,
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qrw
