//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_ERRORS_HPP
#define SYNVIA_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synvia {

/// Base class of all domain errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &what): std::runtime_error(what) { }
};

/// Malformed text input; `pos` is a 0-based character offset when known.
class ParseError : public Error {
public:
  ParseError(const std::string &what, size_t pos)
      : Error(what + " (at position " + std::to_string(pos) + ")"),
        pos_(pos) { }
  explicit ParseError(const std::string &what): Error(what), pos_(0) { }

  size_t position() const { return pos_; }

private:
  size_t pos_;
};

/// A molecule whose bonding cannot be reconciled with the valence table.
class ValenceError : public Error {
public:
  using Error::Error;
};

/// Grammar feature outside the supported subset (stereo, isotopes, ...).
class UnsupportedFeature : public Error {
public:
  using Error::Error;
};

/// Atom-map bookkeeping errors in reaction templates.
class MapNumberError : public Error {
public:
  using Error::Error;
};

/// Operand count does not equal template arity.
class ArityMismatch : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent data files (catalogs, indices, checkpoints).
class DataError : public Error {
public:
  using Error::Error;
};

/// Structurally invalid postfix program (underflow, leftover stack, ...).
class InvalidProgram : public Error {
public:
  using Error::Error;
};

/// Tensor shape disagreement inside the model.
class ShapeMismatch : public Error {
public:
  using Error::Error;
};

/// Token prefix longer than the model's maximum sequence length.
class SequenceTooLong : public Error {
public:
  using Error::Error;
};

/// Pathway sampling exhausted its retry budget.
class DeadEnd : public Error {
public:
  using Error::Error;
};

/// Fingerprint length disagreement.
class LengthMismatch : public Error {
public:
  using Error::Error;
};

/// Query against an index with no entries.
class EmptyIndex : public Error {
public:
  using Error::Error;
};

/// Gradient became NaN or infinite during a training step.
class NonFiniteGradient : public Error {
public:
  using Error::Error;
};

}  // namespace synvia

#endif  // SYNVIA_ERRORS_HPP
