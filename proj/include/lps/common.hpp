#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lps {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Invalid user-supplied data or parameters (bad model, out-of-range knob).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operation applied outside its mathematical domain (e.g. negative power of
/// an operator with a kernel component present).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Refusal to evaluate a t-integral whose declared symbol decay makes it
/// divergent.
struct DivergenceError : DomainError {
    using DomainError::DomainError;
};

} // namespace lps
