#pragma once

#include <stdexcept>
#include <string>

namespace retina {

// Error taxonomy shared by the whole toolkit. The CLI maps every code except
// `internal` to exit status 1; `internal` (a broken invariant) maps to 2.
enum class ErrorCode {
    dimension,
    parameter,
    io,
    format,
    sequence,
    generation,
    evaluation,
    internal,
};

inline const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::dimension: return "dimension";
        case ErrorCode::parameter: return "parameter";
        case ErrorCode::io: return "io";
        case ErrorCode::format: return "format";
        case ErrorCode::sequence: return "sequence";
        case ErrorCode::generation: return "generation";
        case ErrorCode::evaluation: return "evaluation";
        case ErrorCode::internal: return "internal";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
          code_(code),
          detail_(detail) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

}  // namespace retina
