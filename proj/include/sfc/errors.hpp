#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sfc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Error that refers to a specific point of the input cloud.
class PointError : public Error {
 public:
  PointError(const std::string& what, std::size_t point)
      : Error(what + " (point " + std::to_string(point) + ")"), point_(point) {}
  std::size_t point() const { return point_; }

 private:
  std::size_t point_;
};

class ZeroRangePoint : public PointError {
 public:
  explicit ZeroRangePoint(std::size_t point)
      : PointError("point at the sensor origin has no direction", point) {}
};

class NonFinitePoint : public PointError {
 public:
  explicit NonFinitePoint(std::size_t point)
      : PointError("point has a non-finite coordinate", point) {}
};

class OutOfBounds : public PointError {
 public:
  explicit OutOfBounds(std::size_t point)
      : PointError("projected coordinate outside the grid", point) {}
};

class EmptyCloud : public Error {
 public:
  EmptyCloud() : Error("operation requires at least one point") {}
};

class KeyOverflow : public Error {
 public:
  using Error::Error;
};

class CorruptIndicator : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class BadCount : public Error {
 public:
  using Error::Error;
};

class BadLabel : public Error {
 public:
  using Error::Error;
};

class MalformedScan : public Error {
 public:
  using Error::Error;
};

class MalformedLabels : public Error {
 public:
  using Error::Error;
};

class CountMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class BadSpec : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfc
