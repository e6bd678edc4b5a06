// Copyright 2026 The lmp2 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace lmp2 {

// Root of every error raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI and the HTTP layer.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message)
      : Error("ParseError", message) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error("ValidationError", message) {}
};

class IndexOutOfRange : public Error {
 public:
  explicit IndexOutOfRange(const std::string& message)
      : Error("IndexOutOfRange", message) {}
};

class EmptyValue : public Error {
 public:
  explicit EmptyValue(const std::string& message)
      : Error("EmptyValue", message) {}
};

class AlphabetExhausted : public Error {
 public:
  explicit AlphabetExhausted(const std::string& message)
      : Error("AlphabetExhausted", message) {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& message)
      : Error("InvalidConfig", message) {}
};

class EmptyEvidence : public Error {
 public:
  explicit EmptyEvidence(const std::string& message)
      : Error("EmptyEvidence", message) {}
};

class AuthError : public Error {
 public:
  explicit AuthError(const std::string& message)
      : Error("AuthError", message) {}
};

class JobNotTerminal : public Error {
 public:
  explicit JobNotTerminal(const std::string& message)
      : Error("JobNotTerminal", message) {}
};

class AlreadySealed : public Error {
 public:
  explicit AlreadySealed(const std::string& message)
      : Error("AlreadySealed", message) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message)
      : Error("SchemaError", message) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& message)
      : Error("IntegrityError", message) {}
};

class IOError : public Error {
 public:
  explicit IOError(const std::string& message) : Error("IOError", message) {}
};

}  // namespace lmp2
