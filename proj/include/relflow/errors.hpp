#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (e.g. |v| >= c).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input at which a closed form degenerates (e.g. rho0 = 0 for soft power laws).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Per-cell velocity reconstruction failed.
class ReconstructionError : public Error {
public:
    ReconstructionError(std::size_t cell, const std::string& what)
        : Error("velocity reconstruction failed at cell " + std::to_string(cell) + ": " + what),
          cell_(cell) {}

    std::size_t cell() const noexcept { return cell_; }

private:
    std::size_t cell_;
};

class CflViolation : public Error {
public:
    using Error::Error;
};

/// A particle step produced a non-finite or superluminal state.
class StepFailure : public Error {
public:
    StepFailure(std::size_t particle, std::size_t step, const std::string& what)
        : Error("particle " + std::to_string(particle) + " failed at step " + std::to_string(step) +
                ": " + what),
          particle_(particle), step_(step) {}

    std::size_t particle() const noexcept { return particle_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t particle_;
    std::size_t step_;
};

/// Not enough samples, time levels or resolutions for the requested estimate.
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Scenario configuration is malformed; `path()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace relflow
