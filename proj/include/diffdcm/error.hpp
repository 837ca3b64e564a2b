#pragma once

#include <stdexcept>
#include <string>

namespace diffdcm {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: usage/input/config/parse/domain/io -> 2, numerical -> 3.

struct invalid_input_error : std::runtime_error {
    explicit invalid_input_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct estimation_error : std::runtime_error {
    explicit estimation_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace diffdcm
