// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace embforge {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record-level problem in a line-delimited input file. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Invariant violation in otherwise well-formed data (duplicate ids,
/// dimension mismatch, unknown task, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The reranker service could not be reached or answered with a failure
/// status. Callers may retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The reranker service answered, but the payload violates the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed for one query.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string query_id, const std::string& what)
      : Error("stage '" + stage + "' failed for query '" + query_id + "': " + what),
        stage_(std::move(stage)),
        query_id_(std::move(query_id)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& query_id() const noexcept { return query_id_; }

 private:
  std::string stage_;
  std::string query_id_;
};

}  // namespace embforge
