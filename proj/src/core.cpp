#include "phantom/core.hpp"

namespace phantom {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ZeroVector: return "zero vector";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    case ErrorKind::InvalidCoefficients: return "invalid coefficients";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::InvalidLabel: return "invalid label";
    case ErrorKind::KTooLarge: return "k too large";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::IncompatibleStrategy: return "incompatible strategy";
    case ErrorKind::TooFewClasses: return "too few classes";
    case ErrorKind::EmptyEvaluation: return "empty evaluation";
    case ErrorKind::Unreachable: return "unreachable";
    case ErrorKind::InvalidSpec: return "invalid spec";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Config: return "config error";
    }
    return "unknown";
}

} // namespace phantom
