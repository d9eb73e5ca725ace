#pragma once

#include <stdexcept>
#include <string>

namespace skyglow {

// Base for every failure the library reports. Subclasses exist so that a
// multi-scope run can tell data problems (keep going, emit NaN) from caller
// bugs and broken inputs (abort).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// File carries the wrong magic, version, or a malformed header.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Header promises more payload than the file contains.
class TruncationError : public Error {
 public:
  using Error::Error;
};

// A DN value outside [0, max] that is not the nodata sentinel.
class RangeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Mask grid and region table disagree (missing or duplicate ids).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Region id not present in the mask table.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Operands with mismatched grid geometry.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Year pairs that are not consecutive, or periods outside the panel.
class SequencingError : public Error {
 public:
  using Error::Error;
};

// No active pixel in the requested scope for a year.
class EmptyScopeError : public Error {
 public:
  using Error::Error;
};

// Fewer observations than the statistic needs.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// No pixel holds a state in both years of a transition estimate.
class EmptyEstimateError : public Error {
 public:
  using Error::Error;
};

// Transition matrix has an unestimated (NaN) row.
class UndefinedChainError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Fixed-effects design is rank deficient (too few regions or years).
class IdentificationError : public Error {
 public:
  using Error::Error;
};

// A log-total is undefined inside the requested period.
class DataError : public Error {
 public:
  using Error::Error;
};

// Synthetic panel spec cannot be realized within the DN range.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

// Change map with zero valued pixels.
class EmptyRenderError : public Error {
 public:
  using Error::Error;
};

}  // namespace skyglow
