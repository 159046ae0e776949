#pragma once

#include <stdexcept>
#include <string>

namespace spikenas {

// Error taxonomy shared by the library and the CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/dimension contract violations inside kernels and layers.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered where finite values are required (diverged training,
// bad gradients). Carries the offending parameter or layer name.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spikenas
