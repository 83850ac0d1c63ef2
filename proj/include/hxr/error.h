/* Copyright 2026 The hxr Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace hxr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between tensors, configs or caches.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced inside a transform.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition (argument out of range).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong phase, e.g. a follower step before any anchor.
class StateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error("config key '" + key + "': " + message), key_(std::move(key)), detail_(message) {}

  const std::string& key() const { return key_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

}  // namespace hxr
