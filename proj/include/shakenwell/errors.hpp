#pragma once

#include <stdexcept>
#include <string>

namespace shakenwell {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The adaptive integrator could not proceed (step-size underflow or step budget exhausted).
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time_reached)
      : Error(what + " (t=" + std::to_string(time_reached) + ")"), time_reached_(time_reached) {}
  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Floquet eigenvectors have coalesced (exceptional point); use the generalized eigenvector.
class CoalescenceError : public Error {
 public:
  using Error::Error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class AmbiguityError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A recurrence denominator vanished; carries the resonant Fourier index.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, int index) : Error(what), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// Evaluation point too close to a pole of the analytically continued potential.
class PoleError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class AccuracyError : public Error {
 public:
  using Error::Error;
};

/// Wavefunction norm ran away under gain.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what + " (t=" + std::to_string(time) + ")"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Bad command-line or configuration input.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace shakenwell
