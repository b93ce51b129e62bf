#pragma once

#include <stdexcept>
#include <string>

namespace ldlc {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A message whose total weight collapsed to zero (or became non-finite).
/// Signals numerical collapse inside the decoder.
struct DegenerateMessageError : Error {
  using Error::Error;
};

/// A component pair with zero total weight was handed to a merge operation.
struct DegeneratePairError : Error {
  using Error::Error;
};

/// Parity matrix construction could not produce a valid instance.
struct GenerationError : Error {
  using Error::Error;
};

/// The sparse solve behind encoding failed or did not reach tolerance.
struct EncodeError : Error {
  using Error::Error;
};

/// A ground-truth oracle could not meet its own accuracy contract.
struct OracleError : Error {
  using Error::Error;
};

/// Message passing collapsed mid-decode; carries iteration context.
struct DecodeError : Error {
  using Error::Error;
};

}  // namespace ldlc
