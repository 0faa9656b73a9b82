#pragma once

#include <stdexcept>
#include <string>

namespace bhsr {

// Input violates a documented invariant (bad matrix, missing certificate, schema).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input for which the numerics cannot produce an answer.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bhsr
