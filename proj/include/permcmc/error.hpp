#pragma once

#include <stdexcept>
#include <string>

namespace permcmc {

/// Base class for failures raised while applying a transition map.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A kernel, target or proposal failed validation at construction.
class InvalidKernel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ZeroForwardProbability : public Error {
 public:
  using Error::Error;
};

class ZeroProposalProbability : public Error {
 public:
  using Error::Error;
};

/// The current point lies outside the support of the conditional law.
class DegenerateLaw : public Error {
 public:
  using Error::Error;
};

class InversionFailure : public Error {
 public:
  using Error::Error;
};

class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

/// Not enough driving values were supplied for the requested updates.
class DrivingExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace permcmc
