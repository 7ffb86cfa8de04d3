#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "veriflow/adapters.hpp"
#include "veriflow/error.hpp"

namespace httplib {
class Client;
}

namespace veriflow {

struct HttpResult {
    nlohmann::json payload;
    int retries = 0;
};

/// JSON-over-HTTP POST carrier shared by every remote backend.
///
/// Connection failures, timeouts, 408, 429 and 5xx are retried with exponential backoff
/// (backoff_base_s * 2^n) up to retry.attempts, then surface as BackendUnavailable. Any
/// other 4xx is a SemanticRejection and is never retried. At most max_in_flight requests
/// run at once; idle connections are pooled.
class HttpTransport {
public:
    explicit HttpTransport(AdapterConfig config);
    ~HttpTransport();

    HttpTransport(const HttpTransport&) = delete;
    HttpTransport& operator=(const HttpTransport&) = delete;

    HttpResult invoke(const nlohmann::json& request);

    const AdapterConfig& config() const noexcept { return config_; }
    const ConcurrencyGate& gate() const noexcept { return gate_; }

private:
    std::unique_ptr<httplib::Client> checkout();
    void checkin(std::unique_ptr<httplib::Client> client);

    AdapterConfig config_;
    std::string origin_;
    std::string path_;
    ConcurrencyGate gate_;
    std::mutex pool_mutex_;
    std::vector<std::unique_ptr<httplib::Client>> pool_;
};

/// One-shot convenience over HttpTransport.
HttpResult http_invoke(const AdapterConfig& config, const nlohmann::json& request_payload);

/// POST {model_id, prompt, temperature, max_tokens} -> {text}. Transport failures become LlmUnavailable.
class HttpLanguageModel final : public LanguageModel {
public:
    explicit HttpLanguageModel(AdapterConfig config);
    std::string complete(const LlmRequest& request) override;
    const HttpTransport& transport() const noexcept { return transport_; }

private:
    HttpTransport transport_;
};

/// POST {query, k} -> [{title, snippet, url}]. Transport failures become SearchUnavailable.
class HttpSearchEngine final : public SearchEngine {
public:
    explicit HttpSearchEngine(AdapterConfig config);
    std::vector<EvidenceItem> web_search(const std::string& query, std::size_t k) override;

private:
    HttpTransport transport_;
};

/// One media service endpoint answering op-tagged requests:
///   {"op":"probe","media_locator"}                        -> {"duration_s", "fps"?}
///   {"op":"detect","media_locator","frame_index","timestamp_s"} -> {"faces":[{"bbox","conf","crop_ref"}]}
///   {"op":"embed","crop_ref"}                             -> {"embedding":[...]}
///   {"op":"transcribe","media_locator"}                   -> {"text","segments"?,"language"?}
class HttpMediaService final : public MediaDecoder,
                               public FaceDetector,
                               public FaceEmbedder,
                               public SpeechTranscriber {
public:
    HttpMediaService(AdapterConfig config, std::size_t declared_dimension = 0);

    MediaInfo probe(const VideoRef& video) override;
    Frame frame_at(const VideoRef& video, const FrameSample& sample) override;
    std::vector<FaceDetection> detect_faces(const Frame& frame) override;
    std::vector<double> embed_face(std::string_view crop_ref) override;
    std::size_t dimension() const override { return dimension_; }
    Transcript transcribe(const VideoRef& video) override;

private:
    nlohmann::json call(const nlohmann::json& request, ErrorCode rejection_code);

    HttpTransport transport_;
    std::size_t dimension_;
};

MediaAdapters make_http_media(const AdapterConfig& config, std::size_t declared_dimension = 0);

}  // namespace veriflow
