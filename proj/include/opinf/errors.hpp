#pragma once

#include <stdexcept>
#include <string>

namespace opinf {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, long iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    long iterations() const noexcept { return iterations_; }

private:
    long iterations_;
};

/// A symmetric factorization hit a non-positive pivot.
class NotPositiveDefiniteError : public Error {
public:
    NotPositiveDefiniteError(const std::string& what, long pivot_index)
        : Error(what + " (pivot index " + std::to_string(pivot_index) + ")"),
          pivot_index_(pivot_index) {}

    long pivot_index() const noexcept { return pivot_index_; }

private:
    long pivot_index_;
};

/// A matrix did not have the rank an operation requires.
class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(const std::string& what, long rank)
        : Error(what + " (numerical rank " + std::to_string(rank) + ")"), rank_(rank) {}

    long rank() const noexcept { return rank_; }

private:
    long rank_;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File reading/writing problems, including malformed formats.
class IoError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage was invoked before its upstream artifacts exist.
class ArtifactError : public Error {
public:
    using Error::Error;
};

}  // namespace opinf
