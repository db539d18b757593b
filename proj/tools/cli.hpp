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

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace ethnipipe::cli {

using EnvLookup = std::function<const char*(const char*)>;

/// Runs one command line (args exclude the program name). Returns the exit
/// code: 0 success, 2 bad config, 3 missing input, 4 runtime failure. Errors
/// are reported on `err` as a single line "error<TAB>kind<TAB>message".
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env);

}  // namespace ethnipipe::cli
