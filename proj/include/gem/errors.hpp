#pragma once

#include <stdexcept>
#include <string>

namespace gem {

/// Bad inputs: out-of-range parameters, broken invariants, malformed configs.
struct ValidationError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Integration blew up or a computation lost its footing.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File could not be read, parsed or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gem
