#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veriflow/gallery.hpp"

namespace veriflow {

enum class Label { Real, Fake };

std::string_view to_string(Label label);
/// Accepts "real" / "fake" (case-insensitive). Throws InvalidArgument otherwise.
Label parse_label(std::string_view s);

struct VideoRef {
    std::string video_id;
    std::string media_locator;
    std::optional<double> duration_s;
    std::optional<Label> label;
};

struct FrameSample {
    std::int64_t frame_index = 0;
    double timestamp_s = 0.0;

    friend bool operator==(const FrameSample&, const FrameSample&) = default;
};

/// A decoded frame as handed to the detector. `handle` is opaque to the pipeline.
struct Frame {
    std::string handle;
    std::int64_t frame_index = 0;
    double timestamp_s = 0.0;
};

struct BoundingBox {
    double x = 0, y = 0, w = 0, h = 0;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct FaceDetection {
    std::int64_t frame_index = 0;
    BoundingBox bbox;
    std::string crop_ref;
    double confidence = 0.0;

    friend bool operator==(const FaceDetection&, const FaceDetection&) = default;
};

struct TranscriptSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;

    friend bool operator==(const TranscriptSegment&, const TranscriptSegment&) = default;
};

struct Transcript {
    std::string text;
    std::vector<TranscriptSegment> segments;
    std::optional<std::string> language_tag;

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

/// Throws InvalidArgument if segments overlap, run backwards, or do not concatenate to `text`.
void validate_transcript(const Transcript& transcript);

struct PersonSighting {
    std::string person_id;
    std::string display_name;
    std::size_t frame_hits = 0;
    double peak_similarity = 0.0;

    friend bool operator==(const PersonSighting&, const PersonSighting&) = default;
};

struct IdentifiedPeople {
    /// One entry per person, ordered by frame_hits descending then person_id.
    std::vector<PersonSighting> people;
    /// Detections that were below the confidence floor or matched nobody.
    std::size_t unknown_face_count = 0;
    std::size_t detection_count = 0;

    friend bool operator==(const IdentifiedPeople&, const IdentifiedPeople&) = default;
};

struct MediaInfo {
    double duration_s = 0.0;
    std::optional<double> fps;
};

// ---------------------------------------------------------------------------
// Backend contracts. Implementations must tolerate concurrent calls.

class MediaDecoder {
public:
    virtual ~MediaDecoder() = default;
    /// Throws MediaUnreadable.
    virtual MediaInfo probe(const VideoRef& video) = 0;
    /// Throws MediaUnreadable, DecodeFailure.
    virtual Frame frame_at(const VideoRef& video, const FrameSample& sample) = 0;
};

class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    /// Throws BackendUnavailable, DecodeFailure.
    virtual std::vector<FaceDetection> detect_faces(const Frame& frame) = 0;
};

class FaceEmbedder {
public:
    virtual ~FaceEmbedder() = default;
    /// Raw (not necessarily normalized) embedding. Throws BackendUnavailable.
    virtual std::vector<double> embed_face(std::string_view crop_ref) = 0;
    /// Declared output length; 0 when the backend cannot say ahead of time.
    virtual std::size_t dimension() const = 0;
};

class SpeechTranscriber {
public:
    virtual ~SpeechTranscriber() = default;
    /// Silent media yields empty text. Throws BackendUnavailable, MediaUnreadable.
    virtual Transcript transcribe(const VideoRef& video) = 0;
};

struct MediaAdapters {
    std::shared_ptr<MediaDecoder> decoder;
    std::shared_ptr<FaceDetector> detector;
    std::shared_ptr<FaceEmbedder> embedder;
    std::shared_ptr<SpeechTranscriber> transcriber;

    bool complete() const { return decoder && detector && embedder && transcriber; }
};

struct IngestConfig {
    double stride_s = 0.5;
    double threshold = kDefaultMatchThreshold;
    std::size_t min_frames = 2;
    double confidence_floor = 0.5;
    std::size_t workers = 1;
};

struct IngestResult {
    IdentifiedPeople people;
    Transcript transcript;

    friend bool operator==(const IngestResult&, const IngestResult&) = default;
};

/// Sample times 0, stride, 2*stride, ... strictly below `duration_s`. With a known
/// frame rate the frame index is the nearest frame and duplicate indices are dropped;
/// otherwise it is the sample ordinal. Throws ZeroDuration, InvalidArgument.
std::vector<FrameSample> sample_frames(double duration_s, double stride_s,
                                       std::optional<double> fps = std::nullopt);

/// Uses the known duration on `video`, falling back to the decoder's probe.
std::vector<FrameSample> sample_frames(const VideoRef& video, double stride_s, MediaDecoder& decoder);

/// Stage 1: frame sampling, detection, embedding and gallery matching, with the
/// transcript fetched concurrently. A person is reported iff matched in at least
/// `min_frames` distinct frames. Throws GalleryEmpty, DimensionMismatch, and adapter
/// errors annotated with the failing frame.
IngestResult identify_people(const VideoRef& video, const GalleryIndex& gallery,
                             const MediaAdapters& adapters, const IngestConfig& config = {});

}  // namespace veriflow
