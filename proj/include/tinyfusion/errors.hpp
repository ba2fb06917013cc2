// Copyright 2026 The tinyfusion Authors.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tinyfusion {

// Malformed annotation JSON. `offset` is the byte position reported by the
// JSON parser.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Well-formed JSON that does not match the annotation schema.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::string field)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A record violates a hard invariant (non-positive size, dangling image_id,
// duplicate id). `record_id` names the offending image or annotation.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, long long record_id)
      : std::runtime_error(what), record_id_(record_id) {}
  long long record_id() const noexcept { return record_id_; }

 private:
  long long record_id_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tinyfusion
