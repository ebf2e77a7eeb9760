#pragma once

#include <stdexcept>
#include <string>

namespace rsb {

inline constexpr int kExitConfig = 2;
inline constexpr int kExitMesh = 3;
inline constexpr int kExitSolver = 4;
inline constexpr int kExitIo = 5;

// Each category maps onto one CLI exit code (see exit_code()).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitConfig; }
};

class MeshError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitMesh; }
};

class SolverError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitSolver; }
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitIo; }
};

} // namespace rsb
