#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hdiff {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Point lies outside the chart domain (or an FD stencil would).
struct DomainError : Error {
    using Error::Error;
};

// No certified unique minimal geodesic between the two points.
struct CutLocusError : Error {
    using Error::Error;
};

// Requested exponential-map step exceeds the instance guard.
struct StepTooLarge : Error {
    using Error::Error;
};

struct InvalidStart : Error {
    using Error::Error;
};

struct SizeMismatch : Error {
    using Error::Error;
};

struct MissingGridPoint : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Carries every violation found while validating a config, not just the first.
struct SchemaError : ConfigError {
    explicit SchemaError(std::vector<std::string> violations)
        : ConfigError(join(violations)), violations(std::move(violations)) {}

    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "config validation failed:";
        for (const auto& e : v) {
            s += "\n  - ";
            s += e;
        }
        return s;
    }
};

}  // namespace hdiff
