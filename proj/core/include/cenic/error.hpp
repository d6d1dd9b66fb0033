#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cenic {

enum class ErrorKind {
  ChannelMismatch,
  InvalidStride,
  ShapeError,
  NotDifferentiable,
  ParseError,
  MissingSection,
  TopologyError,
  UnknownPreset,
  DomainError,
  EncodeError,
  DecodeError,
  InputError,
  CorruptStream,
  ModelMismatch,
  NotACencStream,
  VersionError,
  ReportMismatch,
  DataError,
  ScaleError,
  EmptyReport,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what);
  // Byte offset into the parsed text where the problem was detected.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace cenic
