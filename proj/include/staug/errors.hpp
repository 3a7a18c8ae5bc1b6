#pragma once

#include <stdexcept>
#include <string>

namespace staug {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (bad ranges, unusable lengths).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Index or length outside the valid range of a series.
class BoundsError : public Error {
public:
    using Error::Error;
};

/// Operands whose shapes (channels, lengths) do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed input file content.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Fewer than two extrema; no envelope can be fitted.
class DegenerateEnvelopeError : public Error {
public:
    using Error::Error;
};

/// Augmentation requested for a window with no cached decomposition.
class CacheMissError : public Error {
public:
    using Error::Error;
};

/// Training loss became non-finite.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(std::size_t epoch, const std::string& what)
        : Error(what), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

} // namespace staug
