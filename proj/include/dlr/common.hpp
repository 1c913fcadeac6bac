#ifndef DLR_COMMON_HPP
#define DLR_COMMON_HPP

#include <stdexcept>
#include <string>

namespace dlr {

enum class ErrorCode {
    invalid_argument,
    shape_mismatch,
    bad_magic,
    version_mismatch,
    truncated_payload,
    io_failure,
    numeric_failure,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    static const char* code_name(ErrorCode c) {
        switch (c) {
        case ErrorCode::invalid_argument:  return "invalid-argument";
        case ErrorCode::shape_mismatch:    return "shape-mismatch";
        case ErrorCode::bad_magic:         return "bad-magic";
        case ErrorCode::version_mismatch:  return "version-mismatch";
        case ErrorCode::truncated_payload: return "truncated-payload";
        case ErrorCode::io_failure:        return "io-failure";
        case ErrorCode::numeric_failure:   return "numeric-failure";
        }
        return "unknown";
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace dlr

#endif
