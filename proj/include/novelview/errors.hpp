// Copyright 2026 The novelview Authors.
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

#include <stdexcept>
#include <string>

namespace novelview {

/// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or unsupported option; the CLI maps this to exit status 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A view vector or metadata file does not match its schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Dataset, checkpoint or image could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Sampling protocol cannot be satisfied by the dataset.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value or out-of-domain numeric input.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace novelview
