// Copyright 2026 The nbhd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NBHD_UTIL_H_
#define NBHD_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nbhd {

std::string Sha256Hex(std::span<const std::uint8_t> bytes);
std::string Sha256Hex(std::string_view text);

// Platform-stable 64-bit hashing (FNV-1a followed by a splitmix finalizer).
std::uint64_t StableHash64(std::string_view text, std::uint64_t seed = 0);
// Maps a 64-bit hash to a uniform double in [0, 1).
double UnitInterval(std::uint64_t h);

// Fixed-point formatting that does not depend on the global locale.
std::string FormatFixed(double value, int decimals);
// Shortest round-trippable-enough form ("%.10g"), e.g. 12 or 0.5.
std::string FormatShort(double value);

std::string Base64Encode(std::span<const std::uint8_t> bytes);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

std::string Trim(std::string_view s);
std::vector<std::string> Split(std::string_view s, char sep);

// Minimal RFC 4180 CSV support.
using CsvRow = std::vector<std::string>;
std::vector<CsvRow> ParseCsv(std::string_view text);
std::vector<CsvRow> ReadCsv(const std::filesystem::path& path);
std::string CsvLine(const CsvRow& row);

// Returns the index of `name` in `header`, throwing ParseError if absent.
std::size_t ColumnIndex(const CsvRow& header, std::string_view name);

}  // namespace nbhd

#endif  // NBHD_UTIL_H_
