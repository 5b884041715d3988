#pragma once

#include <stdexcept>
#include <string>

namespace hotgp {

/// Factorization failed even at the maximum jitter level.
class NotPsdError : public std::runtime_error {
public:
    explicit NotPsdError(const std::string& what) : std::runtime_error(what) {}
};

class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

class NotFittedError : public std::runtime_error {
public:
    explicit NotFittedError(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateDataError : public std::runtime_error {
public:
    explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hotgp
