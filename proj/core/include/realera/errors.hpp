#pragma once

#include <stdexcept>
#include <string>

namespace realera {

// Root of all library errors. Subclasses exist so callers can distinguish
// recoverable conditions (e.g. sampling exhaustion under infeasible
// parameters) from contract violations.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatchError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class UnknownConceptError : public Error {
public:
  using Error::Error;
};

// Vocabulary construction could not satisfy the pairwise-cosine bound
// within the draw budget.
class ConstructionFailureError : public Error {
public:
  using Error::Error;
};

// Rejection sampling exceeded its attempt cap.
class SamplingExhaustedError : public Error {
public:
  using Error::Error;
};

// sample_direction drew a vector too close to the center 16 times in a row.
class DegenerateDrawError : public Error {
public:
  using Error::Error;
};

// Closed-form Gram system is rank-deficient and no ridge was supplied.
class SingularSystemError : public Error {
public:
  using Error::Error;
};

class ZeroVectorError : public Error {
public:
  using Error::Error;
};

// Training loss became non-finite.
class DivergenceError : public Error {
public:
  using Error::Error;
};

// harmonic_mean called outside its domain.
class DomainError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace realera
