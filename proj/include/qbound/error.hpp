#pragma once

#include <stdexcept>
#include <string>

namespace qbound {

/// Bad input: out-of-range parameter, wrong dimension, unsupported mode count.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A requested point lies outside the accessible region (e.g. v_x below the
/// squeezed-variance floor).
class Infeasible : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation at a pole of a rational closed form.
class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An operation was handed an optimizer result that did not converge.
class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qbound
