#pragma once

#include <stdexcept>
#include <string>

namespace mtd {

/// Invalid parameters, inconsistent inputs or malformed files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that cannot produce a meaningful result (rank deficiency,
/// infeasible placement, non-finite values, inadmissible CTF, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mtd
