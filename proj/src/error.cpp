#include "msbsde/error.hpp"

namespace msbsde {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::ResourceLimit: return "resource-limit";
        case ErrorKind::SingularSystem: return "singular-system";
        case ErrorKind::NumericalDomain: return "numerical-domain";
        case ErrorKind::Io: return "io";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::Config: return "config";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace msbsde
