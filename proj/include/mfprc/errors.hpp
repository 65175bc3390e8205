#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfprc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct NonPositiveCommand : Error {
    using Error::Error;
};

struct SimulationDiverged : Error {
    SimulationDiverged(const std::string& what, double time)
        : Error(what), time(time) {}
    double time;
    // Reservoir step at which the divergence was detected, when known.
    std::ptrdiff_t step = -1;
};

struct NoConvergence : Error {
    using Error::Error;
};

struct SettleFailed : Error {
    SettleFailed(const std::string& what, int requested, int actual)
        : Error(what), requested(requested), actual(actual) {}
    int requested;
    int actual;  // 0 when indeterminate
};

struct SingularMatrix : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct ZeroRange : Error {
    using Error::Error;
};

struct ZeroVariance : Error {
    using Error::Error;
};

struct TraceTooShort : Error {
    using Error::Error;
};

struct AllComponentsConstant : Error {
    using Error::Error;
};

struct UnevaluatedIndividual : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace mfprc
