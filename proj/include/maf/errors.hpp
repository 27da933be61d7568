#pragma once

#include <stdexcept>
#include <string>

namespace maf {

enum class Err {
  // unreadable or malformed input artifacts
  BadMagic,
  BadHeader,
  TruncatedFile,
  NonPositiveDims,
  RunSumMismatch,
  ParseError,
  ArtifactMissing,
  // violated preconditions / bad configuration
  DimensionMismatch,
  NoValidPixels,
  EmptySequence,
  OutOfRange,
  WindowCountMismatch,
  TooFewCandidates,
  NoCandidateEmbeddings,
  UnorderedVideo,
  InfeasiblePartition,
  EmptySide,
  InvalidArgument,
};

class MafError : public std::runtime_error {
 public:
  MafError(Err code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& msg) { throw MafError(code, msg); }

const char* err_name(Err code);

// Input errors come from files we could not read or parse (CLI exit 2);
// everything else is a precondition or configuration problem (CLI exit 3).
inline bool is_input_error(Err code) {
  switch (code) {
    case Err::BadMagic:
    case Err::BadHeader:
    case Err::TruncatedFile:
    case Err::NonPositiveDims:
    case Err::RunSumMismatch:
    case Err::ParseError:
    case Err::ArtifactMissing:
      return true;
    default:
      return false;
  }
}

}  // namespace maf
