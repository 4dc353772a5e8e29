#ifndef CWDM_ERRORS_HPP
#define CWDM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cwdm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a conversion.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Interpolation target not bracketed by the data.
class RangeError : public Error {
public:
    using Error::Error;
};

/// An estimator could not find a usable peak or statistic.
class EstimationError : public Error {
public:
    using Error::Error;
};

class SyncError : public Error {
public:
    using Error::Error;
};

/// Both butterfly outputs locked onto the same tributary.
class EqualizerCollapse : public Error {
public:
    using Error::Error;
};

class CountingError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cwdm

#endif // CWDM_ERRORS_HPP
