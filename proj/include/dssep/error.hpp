#pragma once

#include <stdexcept>
#include <string>

namespace dssep {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Swap requested on two sites that are not nearest neighbours.
class AdjacencyError : public Error {
 public:
  using Error::Error;
};

// Coupled evolution started from a pair that is not sitewise ordered.
class OrderingError : public Error {
 public:
  using Error::Error;
};

// Exact oracle asked for a state space larger than the cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class AbsoluteContinuityError : public Error {
 public:
  using Error::Error;
};

// Observable that needs an invariant measure was handed a profile measure.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

class WindowOverlapError : public Error {
 public:
  using Error::Error;
};

// Two algebraically identical evaluations disagree: an implementation bug.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class StabilityError : public Error {
 public:
  using Error::Error;
};

class TestFunctionClassError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dssep
