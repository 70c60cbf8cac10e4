#pragma once

#include <stdexcept>
#include <string>

namespace gbcal {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside a model's parameter domain or a function's support.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A requested prior moment does not exist (or the prior's support does not
// match the model's parameter domain).
class MomentError : public Error {
 public:
  using Error::Error;
};

// Data that makes an estimator sit on the boundary (e.g. all-zero Poisson
// counts) or a formula divide by zero.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// Root finding got a bracket without a sign change.
class BracketError : public Error {
 public:
  BracketError(const std::string& msg, double f_lo, double f_hi)
      : Error(msg), f_lo_(f_lo), f_hi_(f_hi) {}
  double f_lo() const { return f_lo_; }
  double f_hi() const { return f_hi_; }

 private:
  double f_lo_ = 0.0;
  double f_hi_ = 0.0;
};

// A user-supplied callable produced NaN/inf where a finite value was required.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Model/prior pair has no closed-form (conjugate) posterior.
class UnsupportedPairError : public Error {
 public:
  using Error::Error;
};

// An iterative scheme exhausted its budget before reaching tolerance.
// Carries the best estimate so callers can decide whether to use it anyway.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double best_estimate, double error_bound)
      : Error(msg), best_(best_estimate), bound_(error_bound) {}
  double best_estimate() const { return best_; }
  double error_bound() const { return bound_; }

 private:
  double best_ = 0.0;
  double bound_ = 0.0;
};

// File unreadable, empty, or malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A model/prior/config spec string could not be parsed.
class SpecParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace gbcal
