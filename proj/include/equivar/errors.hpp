#pragma once

#include <stdexcept>
#include <string>

namespace equivar {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotARotation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BandlimitOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonManifold : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KernelConstraintViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace equivar
