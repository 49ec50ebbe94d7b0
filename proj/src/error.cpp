#include "affect/error.hpp"

namespace affect {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::ClipTooShort: return "ClipTooShort";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MismatchedTracks: return "MismatchedTracks";
    case ErrorCode::MissingPitch: return "MissingPitch";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DuplicateClipId: return "DuplicateClipId";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::FeaturizerMismatch: return "FeaturizerMismatch";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::NonFiniteLogits: return "NonFiniteLogits";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::LeakageDetected: return "LeakageDetected";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateEmbedding:
    case ErrorCode::NonFiniteLogits:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::LeakageDetected:
    case ErrorCode::IoError:
      return false;
    default:
      return true;
  }
}

}  // namespace affect
