// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace embforge::jsonl {

using Json = nlohmann::json;

/// Calls `fn(record, line_number)` for every non-blank line of `path`.
/// Lines that are not JSON objects raise ParseError with the line number.
/// ValidationError and non-embforge exceptions thrown by `fn` are rewrapped
/// as ParseError for that line; other embforge errors pass through.
void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const Json&, std::size_t)>& fn);

/// Field accessors that raise a descriptive std::invalid_argument, which
/// for_each_record turns into a ParseError carrying the line number.
const std::string& require_string(const Json& record, std::string_view key);
double require_number(const Json& record, std::string_view key);
std::vector<std::string> require_string_array(const Json& record, std::string_view key);

/// Compact, key-sorted serialization used for every output file so that
/// equal values always produce identical bytes.
std::string dump(const Json& record);

/// Writes one record per line through a temporary file, then renames it
/// into place. A failed write leaves no file at `path`.
void write_lines(const std::filesystem::path& path, const std::vector<Json>& records);

}  // namespace embforge::jsonl
