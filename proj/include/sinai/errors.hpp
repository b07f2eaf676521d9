#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sinai {

enum class ErrorKind {
    InvalidSpec,
    OutOfWindow,
    HorizonTooSmall,
    WindowExhausted,
    EmptySegment,
    ValleyTooNarrow,
    BadInterval,
    LevelOutOfRange,
    GammaTooSmall,
    BudgetExceeded,
    NoGoodEnvironmentFound,
    InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Base error for everything the library throws on a broken contract.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::OutOfWindow: return "OutOfWindow";
    case ErrorKind::HorizonTooSmall: return "HorizonTooSmall";
    case ErrorKind::WindowExhausted: return "WindowExhausted";
    case ErrorKind::EmptySegment: return "EmptySegment";
    case ErrorKind::ValleyTooNarrow: return "ValleyTooNarrow";
    case ErrorKind::BadInterval: return "BadInterval";
    case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorKind::GammaTooSmall: return "GammaTooSmall";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::NoGoodEnvironmentFound: return "NoGoodEnvironmentFound";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace sinai
