#pragma once

#include <stdexcept>
#include <string>

namespace csls {

// Failure categories. The CLI maps these one-to-one onto exit codes.
enum class ErrorKind {
    usage,      // bad argument or configuration value (exit 1)
    data,       // malformed input or violated data invariant (exit 2)
    numerical,  // divergence, singular prototype, undefined modulation (exit 3)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::usage: return 1;
            case ErrorKind::data: return 2;
            case ErrorKind::numerical: return 3;
        }
        return 2;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& msg) { throw Error(ErrorKind::usage, msg); }
[[noreturn]] inline void fail_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void fail_numerical(const std::string& msg) { throw Error(ErrorKind::numerical, msg); }

}  // namespace csls
