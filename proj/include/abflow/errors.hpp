#pragma once

#include <stdexcept>
#include <string>

namespace abflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A triangular factor had a pivot below the singularity threshold.
class SingularMatrix : public Error {
 public:
  SingularMatrix(const std::string& what, int pivot_index)
      : Error(what), pivot_index_(pivot_index) {}

  int pivot_index() const noexcept { return pivot_index_; }

 private:
  int pivot_index_;
};

class SingularDenominator : public SingularMatrix {
 public:
  using SingularMatrix::SingularMatrix;
};

/// Raised when the sum matrix of an AB-type update is numerically singular.
///
/// `index` is the flow index of the iterate that could not be formed. For
/// the plain chain, `sum_index` is j such that A_1 + B_j was singular, so
/// index == sum_index + 1. Accelerated runs additionally fill `outer` and
/// `inner` (inner == 0 means the failing solve was the outer update).
class Breakdown : public Error {
 public:
  Breakdown(const std::string& what, long index, long sum_index, int outer = 0,
            int inner = 0)
      : Error(what),
        index_(index),
        sum_index_(sum_index),
        outer_(outer),
        inner_(inner) {}

  long index() const noexcept { return index_; }
  long sum_index() const noexcept { return sum_index_; }
  int outer() const noexcept { return outer_; }
  int inner() const noexcept { return inner_; }

 private:
  long index_;
  long sum_index_;
  int outer_;
  int inner_;
};

class PoleEncountered : public Error {
 public:
  using Error::Error;
};

class InvalidSpectrum : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidBounds : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t offset)
      : Error(what + " (line " + std::to_string(line) + ", offset " +
              std::to_string(offset) + ")"),
        line_(line),
        offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace abflow
