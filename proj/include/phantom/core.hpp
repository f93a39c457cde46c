#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace phantom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
    ZeroVector,
    DimensionMismatch,
    ShapeMismatch,
    InvalidCoefficients,
    InvalidArgument,
    InvalidLabel,
    KTooLarge,
    NonFinite,
    IncompatibleStrategy,
    TooFewClasses,
    EmptyEvaluation,
    Unreachable,
    InvalidSpec,
    Io,
    Parse,
    Config,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` lets callers map failures
// to exit codes without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Numeric failures are distinguished from configuration/input failures.
    bool is_numeric() const noexcept {
        return kind_ == ErrorKind::NonFinite || kind_ == ErrorKind::Unreachable ||
               kind_ == ErrorKind::ZeroVector;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require_dims(Index got, Index want, const char* what) {
    if (got != want)
        fail(ErrorKind::DimensionMismatch,
             std::string(what) + ": expected " + std::to_string(want) + ", got " + std::to_string(got));
}

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::ShapeMismatch, what);
}

} // namespace phantom
