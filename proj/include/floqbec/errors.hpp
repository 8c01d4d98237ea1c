#ifndef FLOQBEC_ERRORS_HPP
#define FLOQBEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace floqbec {

/// Integration or spectral analysis failed for numerical reasons
/// (non-finite state, under-resolved record, ...).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Period extraction could not determine a fundamental frequency.
class PeriodError : public NumericError {
public:
    explicit PeriodError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace floqbec

#endif
