#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace momentum {

/// Scientific notation with 17 significant digits (round-trips a double).
inline std::string sci(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", x);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot open output file: " + path.string());
    }
    return os;
}

} // namespace momentum
