#pragma once

#include <stdexcept>
#include <string>

namespace srkrp {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or divisibility violations (matrix shapes, block counts).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-range or inconsistent scheme parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Config file syntax or schema violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// An iterative kernel (SVD) did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A linear system turned out rank deficient. Carries the rank that was found.
class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& what, int rank) : Error(what), rank_(rank) {}
  int rank() const { return rank_; }

 private:
  int rank_;
};

// Generator matrix restricted to the survivors is not full column rank, so the
// block products cannot be recovered.
class DecodeFailure : public RankDeficientError {
 public:
  using RankDeficientError::RankDeficientError;
};

}  // namespace srkrp
