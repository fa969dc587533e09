#pragma once

#include <stdexcept>
#include <string>

namespace fire {

// Error taxonomy. Each family maps to a distinct CLI exit code, see tools/.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TriggerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Direction norm too small to project against.
struct DegenerateDirectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fire
