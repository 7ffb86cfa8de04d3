#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace veriflow {

enum class ErrorCode {
    InvalidArgument,
    Io,
    // identity gallery
    ZeroVector,
    DimensionMismatch,
    NonFiniteComponent,
    EmbeddingCapExceeded,
    DuplicatePersonId,
    FormatVersionUnsupported,
    CorruptRecord,
    // media ingest
    MediaUnreadable,
    ZeroDuration,
    BackendUnavailable,
    DecodeFailure,
    GalleryEmpty,
    // agents
    SearchUnavailable,
    LlmUnavailable,
    MalformedOutput,
    MalformedOutputAfterRetries,
    // adapters
    SemanticRejection,
    FixtureSchemaError,
    // evaluation
    ManifestSchemaError,
    DuplicateVideoId,
    ClassMissing,
    EmptyEvaluation,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. The code is stable and machine-checkable;
/// the message is for humans and carries context such as the frame or agent role.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

    /// Same code, message prefixed with `context: `.
    Error with_context(std::string_view context) const;

private:
    ErrorCode code_;
};

}  // namespace veriflow
