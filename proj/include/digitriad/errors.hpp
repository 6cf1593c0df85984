#pragma once

#include <stdexcept>
#include <string>

namespace digitriad {

// Shape mismatches between tensors (matmul, reshape, layer wiring).
struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

// Element counts that do not fit the platform integer.
struct size_error : std::runtime_error {
    explicit size_error(const std::string& msg) : std::runtime_error("size error: " + msg) {}
};

// Malformed input files (bad magic, truncation, out-of-range values).
struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

// Convolution/pooling geometry that does not divide evenly or goes negative.
struct geometry_error : std::runtime_error {
    explicit geometry_error(const std::string& msg) : std::runtime_error("geometry error: " + msg) {}
};

// Values outside an operation's domain (labels > 9, empty datasets, ...).
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& msg) : std::runtime_error("domain error: " + msg) {}
};

// API misuse (backward before forward, step before attach, ...).
struct state_error : std::runtime_error {
    explicit state_error(const std::string& msg) : std::runtime_error("state error: " + msg) {}
};

// Filesystem failures.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error("i/o error: " + msg) {}
};

}  // namespace digitriad
