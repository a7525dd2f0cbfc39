#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cowlink {

// Text input (CSV, config file) that cannot be parsed. Carries the source
// path and 1-based line number so callers can point the user at the fault.
class parse_error : public std::runtime_error {
public:
    parse_error(std::string path, std::size_t line, const std::string& message)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + message),
          path_(std::move(path)),
          line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cowlink
