#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace carlab {

/// Base class for all numeric-lab errors. `kind()` is the stable
/// machine-readable identifier used in error JSON and exit-code mapping.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define CARLAB_DEFINE_ERROR(Name)                                     \
    class Name final : public Error {                                 \
    public:                                                           \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

CARLAB_DEFINE_ERROR(InvalidGeometry);
CARLAB_DEFINE_ERROR(UnknownBoundary);
CARLAB_DEFINE_ERROR(UnsupportedGeometry);
CARLAB_DEFINE_ERROR(WeightViolation);
CARLAB_DEFINE_ERROR(ParameterOverflow);
CARLAB_DEFINE_ERROR(SolverDiverged);
CARLAB_DEFINE_ERROR(IncompatibleData);
CARLAB_DEFINE_ERROR(TruncationTooSmall);
CARLAB_DEFINE_ERROR(GammaOffGrid);
CARLAB_DEFINE_ERROR(SamplingExhausted);
CARLAB_DEFINE_ERROR(ConfigInvalid);

#undef CARLAB_DEFINE_ERROR

}  // namespace carlab
