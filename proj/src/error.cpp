#include "veriflow/error.hpp"

namespace veriflow {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteComponent: return "NonFiniteComponent";
        case ErrorCode::EmbeddingCapExceeded: return "EmbeddingCapExceeded";
        case ErrorCode::DuplicatePersonId: return "DuplicatePersonId";
        case ErrorCode::FormatVersionUnsupported: return "FormatVersionUnsupported";
        case ErrorCode::CorruptRecord: return "CorruptRecord";
        case ErrorCode::MediaUnreadable: return "MediaUnreadable";
        case ErrorCode::ZeroDuration: return "ZeroDuration";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::DecodeFailure: return "DecodeFailure";
        case ErrorCode::GalleryEmpty: return "GalleryEmpty";
        case ErrorCode::SearchUnavailable: return "SearchUnavailable";
        case ErrorCode::LlmUnavailable: return "LlmUnavailable";
        case ErrorCode::MalformedOutput: return "MalformedOutput";
        case ErrorCode::MalformedOutputAfterRetries: return "MalformedOutputAfterRetries";
        case ErrorCode::SemanticRejection: return "SemanticRejection";
        case ErrorCode::FixtureSchemaError: return "FixtureSchemaError";
        case ErrorCode::ManifestSchemaError: return "ManifestSchemaError";
        case ErrorCode::DuplicateVideoId: return "DuplicateVideoId";
        case ErrorCode::ClassMissing: return "ClassMissing";
        case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error Error::with_context(std::string_view context) const {
    return Error(code_, std::string(context) + ": " + what());
}

}  // namespace veriflow
