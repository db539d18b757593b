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

#include "ethnipipe/labels.hpp"

#include <algorithm>
#include <cctype>

namespace ethnipipe {

std::optional<EthnicLabel> LabelFromCode(int code) {
  if (code < 0 || code >= kNumClasses) return std::nullopt;
  return static_cast<EthnicLabel>(code);
}

std::optional<EthnicLabel> LabelFromName(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string needle = lower(name);
  for (EthnicLabel label : kAllLabels) {
    if (lower(LabelName(label)) == needle) return label;
  }
  return std::nullopt;
}

}  // namespace ethnipipe
