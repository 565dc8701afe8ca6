#ifndef CONLE_CORE_ERROR_HPP
#define CONLE_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace conle {

// Numeric values mirror conle_status in the public C header.
enum class ErrorCode : int {
    invalid_argument = 1,
    parse = 2,
    dimension = 3,
    io = 4,
    diverged = 5,
    internal = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace conle

#endif
