// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>

#include "embforge/error.hpp"

namespace embforge::text {

namespace {

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error(std::string("ICU NFC normalizer unavailable: ") + u_errorName(status));
  }
  return *n;
}

std::string lower(std::string_view utf8) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

}  // namespace

std::string nfc(std::string_view utf8) {
  const auto& normalizer = nfc_instance();
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  UErrorCode status = U_ZERO_ERROR;
  if (normalizer.isNormalized(u, status) && U_SUCCESS(status)) {
    std::string out;
    u.toUTF8String(out);
    return out;
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = normalizer.normalize(u, status);
  if (U_FAILURE(status)) {
    throw Error(std::string("NFC normalization failed: ") + u_errorName(status));
  }
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string_view trim(std::string_view utf8) {
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto len = static_cast<int32_t>(utf8.size());

  int32_t begin = 0;
  while (begin < len) {
    int32_t next = begin;
    UChar32 c;
    U8_NEXT(s, next, len, c);
    if (c < 0 || !u_isUWhiteSpace(c)) {
      break;
    }
    begin = next;
  }
  int32_t end = len;
  while (end > begin) {
    int32_t prev = end;
    UChar32 c;
    U8_PREV(s, 0, prev, c);
    if (c < 0 || !u_isUWhiteSpace(c)) {
      break;
    }
    end = prev;
  }
  return utf8.substr(static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin));
}

std::string normalize_key(std::string_view utf8) {
  const std::string composed = nfc(utf8);
  return std::string(trim(composed));
}

std::vector<std::string> tokenize(std::string_view utf8) {
  const std::string composed = nfc(utf8);
  const auto* s = reinterpret_cast<const uint8_t*>(composed.data());
  const auto len = static_cast<int32_t>(composed.size());

  std::vector<std::string> tokens;
  int32_t i = 0;
  int32_t run_start = -1;
  auto flush = [&](int32_t run_end) {
    if (run_start >= 0) {
      tokens.push_back(lower(std::string_view(composed).substr(
          static_cast<std::size_t>(run_start), static_cast<std::size_t>(run_end - run_start))));
      run_start = -1;
    }
  };
  while (i < len) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(s, i, len, c);
    if (c >= 0 && u_isalnum(c)) {
      if (run_start < 0) {
        run_start = at;
      }
    } else {
      flush(at);
    }
  }
  flush(len);
  return tokens;
}

}  // namespace embforge::text
