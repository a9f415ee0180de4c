#pragma once

#include <stdexcept>
#include <string>

namespace wdln {

struct InvalidConfig : std::runtime_error {
    explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidSchedule : std::runtime_error {
    explicit InvalidSchedule(const std::string& what) : std::runtime_error(what) {}
};

struct MissingStateInfo : std::runtime_error {
    explicit MissingStateInfo(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteGradient : std::runtime_error {
    explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

struct TooLarge : std::runtime_error {
    explicit TooLarge(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct SingularChain : std::runtime_error {
    explicit SingularChain(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace wdln
