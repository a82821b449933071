#pragma once

#include <stdexcept>
#include <string>

namespace reprog {

// Error categories map onto distinct CLI exit codes (see tools/reprog.cpp).
enum class ErrorKind {
    dimension,
    usage,
    config,
    insufficient_data,
    format,
    data,
    io,
    provenance,
    undefined_metric,
    missing_head,
    numeric,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace reprog
