#pragma once

#include <stdexcept>
#include <string>

namespace alignmarket {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input file is structurally wrong: bad JSON/CSV, missing field, wrong type.
struct SchemaError : Error {
  using Error::Error;
};

// Structurally valid data that violates a documented invariant
// (prior does not sum to one, signaling rows not stochastic, ...).
struct InvariantError : Error {
  using Error::Error;
};

// Two objects that must agree in shape do not.
struct DimensionError : Error {
  using Error::Error;
};

// A scalar argument is outside its admissible range.
struct DomainError : Error {
  using Error::Error;
};

// Conditioning on a message whose marginal probability is zero.
struct ZeroProbabilityMessageError : Error {
  using Error::Error;
};

// Obedient evaluation of a scheme whose message space is not the action set.
struct MessageNotAnActionError : Error {
  using Error::Error;
};

// Deterministic-scheme enumeration would exceed the hard cap.
struct EnumerationTooLargeError : Error {
  using Error::Error;
};

// Cross-validation asked for more folds than items.
struct InsufficientItemsError : Error {
  using Error::Error;
};

// Conversation started from a feature pair with zero prior probability.
struct ZeroProbabilityFeaturesError : Error {
  using Error::Error;
};

// Exhaustive subset enumeration requested past the feature-space cap.
struct SubsetSpaceTooLargeError : Error {
  using Error::Error;
};

// The simplex pivot tolerance could not be maintained.
struct NumericalFailure : Error {
  using Error::Error;
};

}  // namespace alignmarket
