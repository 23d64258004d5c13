#pragma once

#include <stdexcept>
#include <string>

namespace hte {

/// Invalid configuration value or combination; the message names the bound.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Covariate dimensions that do not line up.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too few observations for the requested computation.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A training subsample without both treated and control units.
class DegenerateSplitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw-record sets that cannot be pooled.
class MergeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wraps a failure with the study coordinates where it happened.
class StudyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hte
