#ifndef LRSD_ERRORS_HPP
#define LRSD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lrsd {

/// Bad data handed to an operation (non-finite entries, shape mismatch, ...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Structurally valid data but an out-of-range or inconsistent parameter.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation failed numerically (NaN iterates, rank-deficient system, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure; message names the offending path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed on-disk content; carries the byte offset of the defect.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace lrsd

#endif  // LRSD_ERRORS_HPP
