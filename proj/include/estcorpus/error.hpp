#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace estcorpus {

// Every failure the core can report. The C API maps these 1:1 onto
// estc_status values, so the order here is part of the ABI.
enum class ErrorCode : int {
  InvalidArgument = 1,
  UnreadableFile,
  MalformedRecord,
  IoError,
  TextTooShort,
  MissingLemmas,
  VocabSizeTooSmall,
  EmptyCorpus,
  IdOutOfRange,
  CorpusTooSmall,
  NoMaskableTokens,
  PieceNotInVocab,
  CorruptRecord,
  UnknownFeature,
  LengthMismatch,
  MalformedTag,
  EmptyInput,
  ConfigError,
  Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the corpus readers; carries the 1-based line of the offending record.
class MalformedRecordError : public Error {
 public:
  MalformedRecordError(std::uint64_t line_no, const std::string& what);
  std::uint64_t line_no() const noexcept { return line_no_; }

 private:
  std::uint64_t line_no_;
};

// Raised by the TFRecord reader. `which` is "length", "data" or "truncated".
class CorruptRecordError : public Error {
 public:
  CorruptRecordError(std::string path, std::uint64_t offset, std::string which);
  const std::string& path() const noexcept { return path_; }
  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& which() const noexcept { return which_; }

 private:
  std::string path_;
  std::uint64_t offset_;
  std::string which_;
};

// Wraps a failure with the pipeline stage that produced it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace estcorpus
