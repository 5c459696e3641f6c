#pragma once

#include <stdexcept>
#include <string>

namespace bvs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BVS_DECLARE_ERROR(Name)                                   \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

/// A covariance-like matrix failed its Cholesky factorization.
BVS_DECLARE_ERROR(NotPositiveDefinite);
BVS_DECLARE_ERROR(LengthMismatch);
BVS_DECLARE_ERROR(DimMismatch);
/// The functional has no closed-form expectation under a Gaussian.
BVS_DECLARE_ERROR(UnsupportedFunctionalForm);
BVS_DECLARE_ERROR(InvalidMixingConstants);
BVS_DECLARE_ERROR(DegenerateModel);
/// Every particle received (numerically) zero likelihood.
BVS_DECLARE_ERROR(WeightCollapse);
/// A NaN or infinity appeared in a value or gradient; usually divergence.
BVS_DECLARE_ERROR(NonFiniteValue);
BVS_DECLARE_ERROR(UnsupportedPrimitive);
BVS_DECLARE_ERROR(ConfigError);
BVS_DECLARE_ERROR(InvalidArgument);

#undef BVS_DECLARE_ERROR

}  // namespace bvs
