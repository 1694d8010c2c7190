// Copyright 2026 The gatspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GATSPOOF_ERRORS_HPP
#define GATSPOOF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gatspoof {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated binary file (WAV, cache, checkpoint, model).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed file whose variant we deliberately do not handle
/// (e.g. a float WAV or a 24-bit PCM WAV).
class UnsupportedFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Malformed text input (protocol lines, score files, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape mismatch in an autodiff op or a model stage.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Unknown key, bad value, or failed validation in configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An API precondition was violated by the caller (bad labels, empty
/// score sets, backward on a non-scalar, NaN gradients, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace gatspoof

#endif  // GATSPOOF_ERRORS_HPP
