// Copyright 2026 The Ranksmith Authors.
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

#ifndef RANKSMITH_ERROR_HPP_
#define RANKSMITH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ranksmith {

/// Process exit codes used by the command line front end.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kNumeric = 3,
  kIo = 4,
};

/// Base of every error raised by the library. Each error carries the exit
/// code the CLI reports for it.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Caller violated a precondition: wrong shapes, bad flags, out of range
/// indices.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(what, ExitCode::kUsage) {}
};

/// Input data breaks a domain invariant (years out of span, infeasible
/// balanced split, mismatched model and feature dimensions).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(what, ExitCode::kUsage) {}
};

/// The quantity is mathematically undefined for the given input (zero-norm
/// vectors, AP without positives, nDCG with zero ideal gain).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(what, ExitCode::kNumeric) {}
};

/// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(what, ExitCode::kNumeric) {}
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, ExitCode::kIo) {}
};

/// Malformed file content. The message names the line (text formats) or byte
/// offset (binary formats).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what, ExitCode::kIo) {}
};

}  // namespace ranksmith

#endif  // RANKSMITH_ERROR_HPP_
