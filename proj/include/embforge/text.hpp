// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace embforge::text {

/// Unicode NFC form of UTF-8 input. Ill-formed sequences become U+FFFD.
std::string nfc(std::string_view utf8);

/// Strips leading and trailing Unicode white space.
std::string_view trim(std::string_view utf8);

/// Dedup key: NFC, then trim. Case is preserved.
std::string normalize_key(std::string_view utf8);

/// Lowercased maximal runs of alphanumeric code points (general category
/// L* or Nd) after NFC. No stemming, no stop words. Ill-formed bytes act as
/// separators.
std::vector<std::string> tokenize(std::string_view utf8);

}  // namespace embforge::text
