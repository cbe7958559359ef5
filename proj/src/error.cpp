#include "estcorpus/error.hpp"

#include <fmt/format.h>

namespace estcorpus {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::TextTooShort: return "TextTooShort";
    case ErrorCode::MissingLemmas: return "MissingLemmas";
    case ErrorCode::VocabSizeTooSmall: return "VocabSizeTooSmall";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::IdOutOfRange: return "IdOutOfRange";
    case ErrorCode::CorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::NoMaskableTokens: return "NoMaskableTokens";
    case ErrorCode::PieceNotInVocab: return "PieceNotInVocab";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MalformedTag: return "MalformedTag";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

MalformedRecordError::MalformedRecordError(std::uint64_t line_no, const std::string& what)
    : Error(ErrorCode::MalformedRecord, fmt::format("malformed record at line {}: {}", line_no, what)),
      line_no_(line_no) {}

CorruptRecordError::CorruptRecordError(std::string path, std::uint64_t offset, std::string which)
    : Error(ErrorCode::CorruptRecord,
            fmt::format("corrupt record in {} at offset {} ({} check failed)", path, offset, which)),
      path_(std::move(path)),
      offset_(offset),
      which_(std::move(which)) {}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), fmt::format("stage '{}': {}", stage, cause.what())), stage_(std::move(stage)) {}

}  // namespace estcorpus
