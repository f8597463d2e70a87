// errors.hpp
//
// Typed error conditions shared across the library. The CLI maps these
// onto its exit-code contract; library code throws and never exits.

#pragma once

#include <stdexcept>
#include <string>

namespace attnbeam {

enum class ErrorCode {
    InvalidArgument,
    DimMismatch,
    TokenOutOfRange,
    LengthExceeded,
    BadMagic,
    TruncatedPayload,
    NonFiniteValue,
    EmptyReference,
    NonFiniteLoss,
    VersionMismatch,
    CorruptCheckpoint,
    EmptyVocab,
    SearchSpaceTooLarge,
    MissingCorpusStats,
    EmptyCorpus,
    BadFormat,
    IoError,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:     return "InvalidArgument";
        case ErrorCode::DimMismatch:         return "DimMismatch";
        case ErrorCode::TokenOutOfRange:     return "TokenOutOfRange";
        case ErrorCode::LengthExceeded:      return "LengthExceeded";
        case ErrorCode::BadMagic:            return "BadMagic";
        case ErrorCode::TruncatedPayload:    return "TruncatedPayload";
        case ErrorCode::NonFiniteValue:      return "NonFiniteValue";
        case ErrorCode::EmptyReference:      return "EmptyReference";
        case ErrorCode::NonFiniteLoss:       return "NonFiniteLoss";
        case ErrorCode::VersionMismatch:     return "VersionMismatch";
        case ErrorCode::CorruptCheckpoint:   return "CorruptCheckpoint";
        case ErrorCode::EmptyVocab:          return "EmptyVocab";
        case ErrorCode::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
        case ErrorCode::MissingCorpusStats:  return "MissingCorpusStats";
        case ErrorCode::EmptyCorpus:         return "EmptyCorpus";
        case ErrorCode::BadFormat:           return "BadFormat";
        case ErrorCode::IoError:             return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

} // namespace attnbeam
