#pragma once

#include <stdexcept>
#include <string>

namespace tadlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Critical point with |V''| at or below the Morse tolerance.
class NonMorseError : public Error {
 public:
  NonMorseError(double x, double vpp);
  double x;
  double vpp;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Basin lookup at (or within 1e-12 of) a basin boundary.
class AmbiguousPointError : public Error {
 public:
  using Error::Error;
};

class DomainEscapeError : public Error {
 public:
  DomainEscapeError(double x, double lo, double hi);
  double x;
};

/// A walker hit its step budget before leaving its basin.
class TimeoutError : public Error {
 public:
  TimeoutError(const std::string& what, double elapsed);
  double elapsed;
};

/// Rejection sampling could not produce a surviving trajectory.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class UnderflowError : public SolverError {
 public:
  using SolverError::SolverError;
};

class DegenerateEigenpairError : public SolverError {
 public:
  using SolverError::SolverError;
};

class GridTooCoarseError : public SolverError {
 public:
  GridTooCoarseError(const std::string& what, double defect);
  double defect;
};

/// Invalid user configuration (bad values, e_min above a barrier, beta ordering).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tadlab
