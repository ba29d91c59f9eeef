#pragma once

#include <stdexcept>
#include <string>

namespace ash {

// Error taxonomy. Each family maps to one CLI exit code (see tools/).
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct InvalidInputError : std::runtime_error {
    explicit InvalidInputError(const std::string& msg)
        : std::runtime_error("invalid input: " + msg) {}
};

struct IngestionError : std::runtime_error {
    explicit IngestionError(const std::string& msg) : std::runtime_error("ingestion error: " + msg) {}
};

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg)
        : std::runtime_error("checkpoint error: " + msg) {}
};

}  // namespace ash
