#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace msvi {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two group values of different variants were combined.
class VariantMismatchError : public Error {
public:
  using Error::Error;
};

/// A matrix handed to vee() is not in the algebra's image.
class NotInAlgebraError : public Error {
public:
  NotInAlgebraError(const std::string& what, double defect)
      : Error(what), defect_(defect) {}
  double defect() const { return defect_; }

private:
  double defect_;
};

/// A group element lies outside the retraction's invertibility domain.
class RetractionDomainError : public Error {
public:
  using Error::Error;
};

/// A group element violates its structural invariants (orthogonality, det).
class InvalidGroupElementError : public Error {
public:
  using Error::Error;
};

/// Non-physical or inconsistent model/configuration parameter.
class InvalidParameterError : public Error {
public:
  using Error::Error;
};

/// Grid or rectangle index out of range.
class IndexError : public Error {
public:
  using Error::Error;
};

/// Newton iteration failed to reach the requested tolerance.
class NewtonDivergenceError : public Error {
public:
  NewtonDivergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  /// Residual inf-norm after each iteration, in order.
  const std::vector<double>& residual_trace() const { return trace_; }

private:
  std::vector<double> trace_;
};

/// The linearized step system is singular.
class SingularJacobianError : public Error {
public:
  using Error::Error;
};

/// Malformed configuration file.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent on-disk data (CSV rows, shapes).
class DataFormatError : public Error {
public:
  using Error::Error;
};

}  // namespace msvi
