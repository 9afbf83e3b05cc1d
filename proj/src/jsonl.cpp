// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/jsonl.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include "embforge/error.hpp"

namespace embforge::jsonl {

namespace {

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open '" + path.string() + "'");
  }
  const std::string source = path.string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) {
      continue;
    }
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) {
      throw ParseError(source, line_no, "record is not a JSON object");
    }
    try {
      fn(record, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
}

const std::string& require_string(const Json& record, std::string_view key) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw std::invalid_argument("missing field '" + std::string(key) + "'");
  }
  if (!it->is_string()) {
    throw std::invalid_argument("field '" + std::string(key) + "' must be a string");
  }
  return it->get_ref<const std::string&>();
}

double require_number(const Json& record, std::string_view key) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw std::invalid_argument("missing field '" + std::string(key) + "'");
  }
  if (!it->is_number()) {
    throw std::invalid_argument("field '" + std::string(key) + "' must be a number");
  }
  const double value = it->get<double>();
  if (!std::isfinite(value)) {
    throw std::invalid_argument("field '" + std::string(key) + "' is not finite");
  }
  return value;
}

std::vector<std::string> require_string_array(const Json& record, std::string_view key) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw std::invalid_argument("missing field '" + std::string(key) + "'");
  }
  if (!it->is_array()) {
    throw std::invalid_argument("field '" + std::string(key) + "' must be an array");
  }
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& item : *it) {
    if (!item.is_string()) {
      throw std::invalid_argument("field '" + std::string(key) + "' must hold strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string dump(const Json& record) { return record.dump(-1, ' ', false, Json::error_handler_t::strict); }

void write_lines(const std::filesystem::path& path, const std::vector<Json>& records) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write '" + tmp.string() + "'");
    }
    for (const auto& r : records) {
      out << dump(r) << '\n';
    }
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("write failed for '" + path.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace embforge::jsonl
