/*
 * Copyright 2026 The artscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace artscore {

// Base of every error thrown by the library. The kind maps onto CLI exit
// codes and HTTP status codes.
class Error : public std::runtime_error {
 public:
  enum class Kind { kDomain, kValidation, kConfig, kIo, kNotFound, kConflict, kForbidden, kNumeric };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(Kind::kDomain, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(Kind::kConfig, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(Kind::kIo, what) {}
};

struct NotFoundError : Error {
  explicit NotFoundError(const std::string& what) : Error(Kind::kNotFound, what) {}
};

struct ConflictError : Error {
  explicit ConflictError(const std::string& what) : Error(Kind::kConflict, what) {}
};

struct ForbiddenError : Error {
  explicit ForbiddenError(const std::string& what) : Error(Kind::kForbidden, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(Kind::kNumeric, what) {}
};

// Carries the full violation list so callers can report every problem at once.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> violations)
      : Error(Kind::kValidation, what), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace artscore
