#pragma once
#include <stdexcept>
#include <string>

namespace deepsn {

// Exit-code mapping used by the CLI: 1 usage, 2 data, 3 numerical, 4 verification.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VerificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace deepsn
