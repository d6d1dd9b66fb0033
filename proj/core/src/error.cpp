#include "cenic/error.hpp"

namespace cenic {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::InvalidStride: return "InvalidStride";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::NotDifferentiable: return "NotDifferentiable";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingSection: return "MissingSection";
    case ErrorKind::TopologyError: return "TopologyError";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::EncodeError: return "EncodeError";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::InputError: return "InputError";
    case ErrorKind::CorruptStream: return "CorruptStream";
    case ErrorKind::ModelMismatch: return "ModelMismatch";
    case ErrorKind::NotACencStream: return "NotACencStream";
    case ErrorKind::VersionError: return "VersionError";
    case ErrorKind::ReportMismatch: return "ReportMismatch";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::ScaleError: return "ScaleError";
    case ErrorKind::EmptyReport: return "EmptyReport";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

ParseError::ParseError(std::size_t offset, const std::string& what)
    : Error(ErrorKind::ParseError, what + " (at byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cenic
