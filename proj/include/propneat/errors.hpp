#pragma once

#include <stdexcept>
#include <string>

namespace propneat {

// Error taxonomy shared across modules. Each maps to one failure contract;
// callers catch the specific type, the CLI maps them to exit codes.

struct CycleDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UntrainableGenome : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MapMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingleClass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewRows : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace propneat
