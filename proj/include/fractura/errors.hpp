#pragma once

#include <stdexcept>
#include <string>

namespace fractura {

struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FileNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RefinementFloorReached : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProjectionTopologyMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotEnoughHistory : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Linear solver failed to reach the requested tolerance. Carries the last
/// relative residual so callers can decide whether to retry or abort.
struct SolveFailure : std::runtime_error {
    double residual;
    explicit SolveFailure(const std::string& what, double res = -1.0)
        : std::runtime_error(what), residual(res) {}
};

struct EstimatorFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fractura
