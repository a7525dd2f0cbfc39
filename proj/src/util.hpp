#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "cowlink/error.hpp"

namespace cowlink {

// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string read_file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(path + ": cannot open");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw io_error(path + ": write failed");
}

}  // namespace cowlink
