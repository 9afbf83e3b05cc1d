// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace embforge {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Lowercase hex SHA-256 of a file's bytes. Throws Error when the file
/// cannot be read.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace embforge
