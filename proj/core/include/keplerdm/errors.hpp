#pragma once

#include <stdexcept>
#include <string>

namespace keplerdm {

// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a formula or numerical method (exit code 3).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A fit or statistic could not be formed from the available data (exit code 3).
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File system and serialization failures (exit code 4).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CheckpointError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace keplerdm
