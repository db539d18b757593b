// Copyright 2026 The ethnipipe Authors
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

namespace ethnipipe {

/// Broad failure categories; the CLI maps them onto exit codes.
enum class ErrorKind {
  kBadConfig,     // malformed parameters or configuration
  kMissingInput,  // a referenced file, key or id does not exist
  kRuntime,       // anything that fails while doing the work
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error BadConfig(const std::string& message) {
  return Error(ErrorKind::kBadConfig, message);
}
inline Error MissingInput(const std::string& message) {
  return Error(ErrorKind::kMissingInput, message);
}
inline Error RuntimeFailure(const std::string& message) {
  return Error(ErrorKind::kRuntime, message);
}

}  // namespace ethnipipe
