#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msbsde {

enum class ErrorKind {
    InvalidArgument,
    ResourceLimit,
    SingularSystem,
    NumericalDomain,
    Io,
    InsufficientData,
    Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; the kind tells callers (the CLI
/// in particular) how to react.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace msbsde
