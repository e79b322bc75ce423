#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vbmse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

// Base class for all library errors; subtypes map onto the C API status codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (bad cell, bad header, ragged row, ...).
class ParseError : public Error {
public:
  using Error::Error;
};

// Caller passed an argument outside its documented domain.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// Not enough observations for the requested window/estimate.
class InsufficientHistory : public Error {
public:
  using Error::Error;
};

// Numerical failure: non-convergence, degenerate spectrum, singular system.
class NumericError : public Error {
public:
  using Error::Error;
};

// Filesystem failure while reading or writing results.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace vbmse
