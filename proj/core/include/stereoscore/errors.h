// Copyright 2026 The StereoScore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STEREOSCORE_ERRORS_H_
#define STEREOSCORE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace stereoscore {

// Root of every error thrown by the library. The CLI maps these to exit
// code 2 (data/contract error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not compose; the message names the offending axis.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Misuse of a stateful API (backward twice, missing gradient, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by an op or by training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset content (manifest rows, labels, image sizes).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Binary file errors. Each condition has its own type so callers and tests
// can tell them apart.
class FormatError : public Error {
 public:
  using Error::Error;
};

class MagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

class MaxvalError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Correlation requested on zero-variance input.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

}  // namespace stereoscore

#endif  // STEREOSCORE_ERRORS_H_
