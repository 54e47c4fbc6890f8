#pragma once

#include <stdexcept>
#include <string>

namespace mdrclt {

// Contract violations on inputs (bad tables, bad parameters) surface as
// std::invalid_argument. Numerical degeneracies that depend on the data
// (conditioning on a null event, an empty label class, a near-singular
// covariance) surface as DegenerateError so callers can tell them apart.
class DegenerateError : public std::runtime_error {
public:
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mdrclt
