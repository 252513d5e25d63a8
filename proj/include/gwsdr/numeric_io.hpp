// Copyright 2026 The gwsdr Authors
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

// Locale-independent number formatting and parsing shared by every text
// format the library reads or writes.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gwsdr {

/// Shortest "%g"-style rendering with 9 significant digits.
std::string format_real(double v);
std::string format_real(double v, int significant_digits);
/// Shortest text that parses back to exactly `v`.
std::string format_exact(double v);

/// Throws Error(kParse) on anything that is not a complete number.
double parse_real(std::string_view text);
long long parse_int(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace gwsdr
