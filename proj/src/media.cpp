#include "veriflow/media.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <future>
#include <map>
#include <set>
#include <thread>

#include "veriflow/error.hpp"
#include "veriflow/text.hpp"

namespace veriflow {

std::string_view to_string(Label label) { return label == Label::Fake ? "fake" : "real"; }

Label parse_label(std::string_view s) {
    const auto lower = text::to_lower(text::trim(s));
    if (lower == "real") return Label::Real;
    if (lower == "fake") return Label::Fake;
    throw Error(ErrorCode::InvalidArgument, "label must be 'real' or 'fake', got '" + std::string(s) + "'");
}

void validate_transcript(const Transcript& transcript) {
    if (transcript.segments.empty()) return;
    std::string joined;
    double prev_end = -INFINITY;
    for (const auto& seg : transcript.segments) {
        if (!(seg.start_s <= seg.end_s) || seg.start_s < prev_end) {
            throw Error(ErrorCode::InvalidArgument, "transcript segments overlap or are out of order");
        }
        prev_end = seg.end_s;
        joined += seg.text;
    }
    if (joined != transcript.text) {
        throw Error(ErrorCode::InvalidArgument, "transcript text differs from the concatenated segments");
    }
}

std::vector<FrameSample> sample_frames(double duration_s, double stride_s, std::optional<double> fps) {
    if (!(stride_s > 0.0) || !std::isfinite(stride_s)) {
        throw Error(ErrorCode::InvalidArgument, "frame stride must be positive");
    }
    if (fps && !(*fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame rate must be positive");
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        throw Error(ErrorCode::ZeroDuration, "media has no duration");
    }
    // Tolerance keeps e.g. 3 * 0.3 from sneaking under a 0.9 s duration.
    const double limit = duration_s - 1e-9 * std::max(1.0, duration_s);
    std::vector<FrameSample> samples;
    for (std::int64_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * stride_s;
        if (i > 0 && !(t < limit)) break;
        const std::int64_t index = fps ? std::llround(t * *fps) : i;
        if (!samples.empty() && samples.back().frame_index == index) continue;
        samples.push_back({index, t});
    }
    return samples;
}

std::vector<FrameSample> sample_frames(const VideoRef& video, double stride_s, MediaDecoder& decoder) {
    const MediaInfo info = decoder.probe(video);
    return sample_frames(video.duration_s.value_or(info.duration_s), stride_s, info.fps);
}

namespace {

struct FrameOutcome {
    std::int64_t frame_index = 0;
    std::size_t detections = 0;
    std::size_t unknown = 0;
    std::vector<Matched> matches;
};

void check_detection(const FaceDetection& d) {
    if (!(d.bbox.w > 0.0 && d.bbox.h > 0.0)) {
        throw Error(ErrorCode::DecodeFailure, "detector returned an empty bounding box");
    }
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
        throw Error(ErrorCode::DecodeFailure, "detector confidence outside [0, 1]");
    }
}

FrameOutcome process_frame(const VideoRef& video, const FrameSample& sample, const GalleryIndex& gallery,
                           const MediaAdapters& adapters, const IngestConfig& config) {
    FrameOutcome out{sample.frame_index, 0, 0, {}};
    const Frame frame = adapters.decoder->frame_at(video, sample);
    const auto detections = adapters.detector->detect_faces(frame);
    out.detections = detections.size();
    for (const auto& det : detections) {
        check_detection(det);
        if (det.confidence < config.confidence_floor) {
            ++out.unknown;
            continue;
        }
        const auto raw = adapters.embedder->embed_face(det.crop_ref);
        const auto query = normalize_embedding(raw, gallery.dimension());
        auto result = match_face(gallery, query, config.threshold);
        if (auto* m = std::get_if<Matched>(&result)) {
            out.matches.push_back(std::move(*m));
        } else {
            ++out.unknown;
        }
    }
    return out;
}

std::string frame_context(const FrameSample& s) {
    return "frame " + std::to_string(s.frame_index) + " (t=" + text::format_double(s.timestamp_s) + "s)";
}

IdentifiedPeople aggregate(const std::vector<FrameOutcome>& outcomes, std::size_t min_frames) {
    struct Tally {
        std::string display_name;
        std::set<std::int64_t> frames;
        double peak = -1.0;
    };
    std::map<std::string, Tally> tallies;
    IdentifiedPeople result;
    for (const auto& o : outcomes) {
        result.detection_count += o.detections;
        result.unknown_face_count += o.unknown;
        for (const auto& m : o.matches) {
            auto& t = tallies[m.person_id];
            t.display_name = m.display_name;
            t.frames.insert(o.frame_index);
            t.peak = std::max(t.peak, m.similarity);
        }
    }
    for (auto& [id, t] : tallies) {
        if (t.frames.size() >= min_frames) {
            result.people.push_back({id, t.display_name, t.frames.size(), t.peak});
        }
    }
    std::stable_sort(result.people.begin(), result.people.end(),
                     [](const PersonSighting& a, const PersonSighting& b) { return a.frame_hits > b.frame_hits; });
    return result;
}

}  // namespace

IngestResult identify_people(const VideoRef& video, const GalleryIndex& gallery, const MediaAdapters& adapters,
                             const IngestConfig& config) {
    if (!adapters.complete()) {
        throw Error(ErrorCode::BackendUnavailable, "media adapters are not configured");
    }
    if (gallery.empty()) throw Error(ErrorCode::GalleryEmpty, "gallery has no persons");
    if (config.min_frames == 0) throw Error(ErrorCode::InvalidArgument, "min_frames must be at least 1");
    if (const auto d = adapters.embedder->dimension(); d != 0 && d != gallery.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "embedder produces " + std::to_string(d) +
                                                      "-dim vectors but the gallery holds " +
                                                      std::to_string(gallery.dimension()));
    }

    auto transcript_future = std::async(std::launch::async, [&] {
        try {
            Transcript t = adapters.transcriber->transcribe(video);
            validate_transcript(t);
            return t;
        } catch (const Error& e) {
            throw e.with_context("transcribe");
        }
    });

    std::vector<FrameSample> samples;
    std::vector<FrameOutcome> outcomes;
    std::vector<std::exception_ptr> errors;
    try {
        samples = sample_frames(video, config.stride_s, *adapters.decoder);
        outcomes.resize(samples.size());
        errors.resize(samples.size());

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < samples.size(); i = next++) {
                try {
                    outcomes[i] = process_frame(video, samples[i], gallery, adapters, config);
                } catch (const Error& e) {
                    errors[i] = std::make_exception_ptr(e.with_context(frame_context(samples[i])));
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        const std::size_t n_workers = std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(samples.size(), 1));
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        worker();
    } catch (...) {
        transcript_future.wait();
        throw;
    }
    for (const auto& e : errors) {
        if (e) {
            transcript_future.wait();
            std::rethrow_exception(e);
        }
    }
    IngestResult result;
    result.people = aggregate(outcomes, config.min_frames);
    result.transcript = transcript_future.get();
    return result;
}

}  // namespace veriflow
