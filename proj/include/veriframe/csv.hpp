// Copyright 2026 The VeriFrame Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace veriframe::csv {

/// Splits one CSV record. Fields may be double-quoted ("" escapes a quote);
/// unquoted fields are trimmed of surrounding blanks. A trailing CR is dropped.
std::vector<std::string> split_record(std::string_view line);

/// Quotes a field only when it contains a comma, quote or line break.
std::string escape(std::string_view field);

std::string join_record(const std::vector<std::string>& fields);

/// Splits text into lines, accepting both LF and CRLF endings.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace veriframe::csv
