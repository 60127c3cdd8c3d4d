#ifndef FRECHETNET_ERRORS_HPP
#define FRECHETNET_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frechetnet {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A distribution or configuration parameter is outside its domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Too few observations for the requested statistic.
class SampleSizeError : public Error {
public:
    using Error::Error;
};

/// A caller-side contract (weights, counts, point validity) was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, std::ptrdiff_t index = -1)
        : Error(what), index_(index) {}

    /// Offending example index, or -1 when not attributable.
    std::ptrdiff_t index() const noexcept { return index_; }

private:
    std::ptrdiff_t index_;
};

/// The ridge-stabilized system could not be factorized.
class SingularError : public Error {
public:
    SingularError(const std::string& what, double ridge) : Error(what), ridge_(ridge) {}

    double ridge() const noexcept { return ridge_; }

private:
    double ridge_;
};

/// A file could not be parsed.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A file carries an unsupported format version.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite risk.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int last_finite_epoch)
        : Error(what), last_finite_epoch_(last_finite_epoch) {}

    int last_finite_epoch() const noexcept { return last_finite_epoch_; }

private:
    int last_finite_epoch_;
};

}  // namespace frechetnet

#endif
