#pragma once

#include <condition_variable>
#include <utility>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veriflow/agents.hpp"
#include "veriflow/media.hpp"

namespace veriflow {

// ---------------------------------------------------------------------------
// Configuration

enum class BackendKind { Mock, Http };

struct RetryPolicy {
    int attempts = 3;
    double backoff_base_s = 0.25;
};

struct AdapterConfig {
    BackendKind backend_kind = BackendKind::Mock;
    std::optional<std::string> endpoint;
    /// Name of the environment variable holding a bearer token.
    std::optional<std::string> credential_ref;
    double timeout_s = 30.0;
    std::size_t max_in_flight = 4;
    RetryPolicy retry;

    /// Throws InvalidArgument when http lacks an endpoint, timeout <= 0, attempts < 1 or max_in_flight == 0.
    void validate() const;
};

inline constexpr const char* kLlmEndpointEnv = "VERIFLOW_LLM_ENDPOINT";
inline constexpr const char* kLlmKeyEnv = "VERIFLOW_LLM_KEY";
inline constexpr const char* kSearchEndpointEnv = "VERIFLOW_SEARCH_ENDPOINT";
inline constexpr const char* kMediaEndpointEnv = "VERIFLOW_MEDIA_ENDPOINT";

/// Caps simultaneous requests on one backend. in_flight()/peak() are for instrumentation.
class ConcurrencyGate {
public:
    explicit ConcurrencyGate(std::size_t max_in_flight);

    class Ticket {
    public:
        explicit Ticket(ConcurrencyGate* gate) : gate_(gate) {}
        Ticket(Ticket&& other) noexcept : gate_(std::exchange(other.gate_, nullptr)) {}
        Ticket(const Ticket&) = delete;
        Ticket& operator=(const Ticket&) = delete;
        Ticket& operator=(Ticket&&) = delete;
        ~Ticket() {
            if (gate_) gate_->release();
        }

    private:
        ConcurrencyGate* gate_;
    };

    Ticket acquire();
    std::size_t in_flight() const;
    std::size_t peak() const;
    std::size_t capacity() const noexcept { return capacity_; }

private:
    void release();

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t in_flight_ = 0;
    std::size_t peak_ = 0;
};

// ---------------------------------------------------------------------------
// Scripted fixtures

struct FixtureDetection {
    BoundingBox bbox;
    double confidence = 0.0;
    std::string embedding_key;
};

struct VideoFixture {
    std::map<std::int64_t, std::vector<FixtureDetection>> frames;
    Transcript transcript;
    std::optional<double> duration_s;
    /// Frame rate used to map sample times onto `frames` keys; 1 when absent.
    std::optional<double> fps;
};

/// Lookup tables behind every mock adapter. Read-only once loaded.
///
/// File layout (JSON):
///   {"frames":{"<index>":[{"bbox":[x,y,w,h],"conf":f,"embedding_key":str}]},
///    "embeddings":{"<key>":[f64...]}, "transcript":str,
///    optional: "segments":[{"start","end","text"}], "language", "duration_s", "fps", "dimension",
///              "videos":{"<media_locator>":{frames/transcript/segments/language/duration_s/fps}},
///              "search":{"<query>":[{"title","snippet","url"}]}, "search_unavailable":bool,
///              "llm":{"<prompt hash>":"reply text"}}
/// Without "videos" the top-level video answers for every locator; with it, lookups are strict.
struct FixtureSet {
    std::filesystem::path path;
    VideoFixture default_video;
    std::map<std::string, VideoFixture> videos;
    std::map<std::string, std::vector<double>> embeddings;
    std::optional<std::size_t> dimension;
    std::map<std::string, std::vector<EvidenceItem>> search;
    bool search_unavailable = false;
    std::map<std::string, std::string> llm;

    /// nullptr when the locator has no fixture.
    const VideoFixture* video_for(std::string_view media_locator) const;
};

/// Key under which the mock language model looks up a reply for `prompt`.
std::string prompt_key(std::string_view prompt);

/// Throws FixtureSchemaError (including unreadable files).
FixtureSet load_fixtures(const std::filesystem::path& path);
FixtureSet parse_fixtures(std::string_view json_text);

class MockMedia final : public MediaDecoder, public FaceDetector, public FaceEmbedder, public SpeechTranscriber {
public:
    explicit MockMedia(std::shared_ptr<const FixtureSet> fixtures);

    MediaInfo probe(const VideoRef& video) override;
    Frame frame_at(const VideoRef& video, const FrameSample& sample) override;
    std::vector<FaceDetection> detect_faces(const Frame& frame) override;
    std::vector<double> embed_face(std::string_view crop_ref) override;
    std::size_t dimension() const override;
    Transcript transcribe(const VideoRef& video) override;

private:
    const VideoFixture& video(std::string_view locator) const;

    std::shared_ptr<const FixtureSet> fixtures_;
};

class MockLanguageModel final : public LanguageModel {
public:
    explicit MockLanguageModel(std::shared_ptr<const FixtureSet> fixtures);
    /// Unscripted prompts raise LlmUnavailable naming the missing key.
    std::string complete(const LlmRequest& request) override;

private:
    std::shared_ptr<const FixtureSet> fixtures_;
};

class MockSearchEngine final : public SearchEngine {
public:
    explicit MockSearchEngine(std::shared_ptr<const FixtureSet> fixtures);
    /// Unscripted queries return no results.
    std::vector<EvidenceItem> web_search(const std::string& query, std::size_t k) override;

private:
    std::shared_ptr<const FixtureSet> fixtures_;
};

MediaAdapters make_mock_media(std::shared_ptr<const FixtureSet> fixtures);
AgentAdapters make_mock_agents(std::shared_ptr<const FixtureSet> fixtures);

// ---------------------------------------------------------------------------
// Payload recording, for auditing what leaves the process.

class PayloadLog {
public:
    void record(std::string channel, std::string payload);
    std::vector<std::pair<std::string, std::string>> entries() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

class RecordingLanguageModel final : public LanguageModel {
public:
    RecordingLanguageModel(std::shared_ptr<LanguageModel> inner, std::shared_ptr<PayloadLog> log);
    std::string complete(const LlmRequest& request) override;

private:
    std::shared_ptr<LanguageModel> inner_;
    std::shared_ptr<PayloadLog> log_;
};

class RecordingSearchEngine final : public SearchEngine {
public:
    RecordingSearchEngine(std::shared_ptr<SearchEngine> inner, std::shared_ptr<PayloadLog> log);
    std::vector<EvidenceItem> web_search(const std::string& query, std::size_t k) override;

private:
    std::shared_ptr<SearchEngine> inner_;
    std::shared_ptr<PayloadLog> log_;
};

/// Wraps both agent adapters so every outbound payload lands in `log`.
AgentAdapters record_payloads(const AgentAdapters& adapters, std::shared_ptr<PayloadLog> log);

}  // namespace veriflow
