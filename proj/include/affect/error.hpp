#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace affect {

enum class ErrorCode {
  // input validation
  NotFound,
  UnsupportedFormat,
  EmptyAudio,
  ClipTooShort,
  InvalidArgument,
  MismatchedTracks,
  MissingPitch,
  EmptyText,
  DimensionMismatch,
  MalformedLine,
  MissingField,
  DuplicateClipId,
  UnknownDataset,
  EmptyCandidates,
  EmptyCorpus,
  MissingGroundTruth,
  InsufficientPairs,
  InsufficientData,
  SchemaMismatch,
  VersionMismatch,
  CorruptCheckpoint,
  FeaturizerMismatch,
  // runtime failures
  DegenerateEmbedding,
  NonFiniteLogits,
  NonFiniteLoss,
  LeakageDetected,
  IoError,
};

std::string_view to_string(ErrorCode code);

// True for errors caused by bad user input (CLI exit code 1); everything
// else is a runtime failure (exit code 2).
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace affect
