#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinnflow {

// Bad user input: malformed config, schema violation, inconsistent sizes.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble: missing file, unwritable output. Exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Training blew up (loss above the divergence threshold or non-finite).
// Exit code 2.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A non-finite value appeared on the tape; carries the first bad node index
// so the fault can be traced to the operation that produced it. Exit code 2.
class NumericFault : public std::runtime_error {
public:
    NumericFault(std::size_t node, const std::string& what)
        : std::runtime_error(what), node_index(node) {}
    std::size_t node_index;
};

}  // namespace pinnflow
