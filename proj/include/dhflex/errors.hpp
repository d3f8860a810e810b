#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dhflex {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- ingest -----------------------------------------------------------

/// Malformed CSV content; carries the 1-based line number of the offender.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Two rows describe the same (meter, hour) cell or the same meter meta.
class DuplicateRow : public Error {
 public:
  using Error::Error;
};

/// Series length is not a positive multiple of 24 hours.
class BadHorizon : public Error {
 public:
  using Error::Error;
};

/// A meter appears in the time-series file but has no metadata row.
class MissingMeta : public Error {
 public:
  using Error::Error;
};

/// A series consists of gaps only, so interpolation has nothing to anchor on.
class UnfillableSeries : public Error {
 public:
  UnfillableSeries(int meter_id, const std::string& what)
      : Error("meter " + std::to_string(meter_id) + ": " + what),
        meter_id_(meter_id) {}
  int meter_id() const { return meter_id_; }

 private:
  int meter_id_;
};

// --- lp ---------------------------------------------------------------

/// Structurally invalid linear program (dimension mismatch, NaN, bad bounds).
class BadProgram : public Error {
 public:
  using Error::Error;
};

/// Simplex iteration limit exhausted before reaching a terminal status.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// --- metrics ----------------------------------------------------------

/// A metric's denominator is zero (all-zero flows, zero peak, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// --- synthgen ---------------------------------------------------------

/// Generator specification violates its own invariants (q_mean > q_max, ...).
class BadSpec : public Error {
 public:
  using Error::Error;
};

// --- cli --------------------------------------------------------------

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dhflex
