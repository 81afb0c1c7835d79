// Error types shared across the gyrodiff library.
#pragma once

#include <stdexcept>
#include <string>

namespace gyrodiff {

/// Base class for every error raised by the library. The CLI maps each
/// concrete type onto a distinct non-zero exit code (see exit_code()).
class Error : public std::runtime_error {
public:
    Error(const std::string& kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), message_(message) {}
    virtual int exit_code() const noexcept { return 1; }
    /// what() without the leading type name.
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
};

#define GYRODIFF_DEFINE_ERROR(Name, Code)                                      \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name, what) {}           \
        int exit_code() const noexcept override { return Code; }               \
    }

GYRODIFF_DEFINE_ERROR(ConfigError, 2);
GYRODIFF_DEFINE_ERROR(IoError, 3);
GYRODIFF_DEFINE_ERROR(FormatError, 4);
GYRODIFF_DEFINE_ERROR(ChecksumError, 5);
GYRODIFF_DEFINE_ERROR(MissingArtifact, 6);
GYRODIFF_DEFINE_ERROR(MissingCheckpoint, 7);
GYRODIFF_DEFINE_ERROR(DivergenceError, 8);
GYRODIFF_DEFINE_ERROR(ShapeError, 9);
GYRODIFF_DEFINE_ERROR(DegenerateSignal, 10);
GYRODIFF_DEFINE_ERROR(DegenerateSequence, 11);
GYRODIFF_DEFINE_ERROR(EmptyWindow, 12);
GYRODIFF_DEFINE_ERROR(EmptyBatch, 13);
GYRODIFF_DEFINE_ERROR(MissingLabel, 14);
GYRODIFF_DEFINE_ERROR(RateMismatch, 15);

#undef GYRODIFF_DEFINE_ERROR

} // namespace gyrodiff
