#include "veriflow/http_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "veriflow/error.hpp"

namespace veriflow {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string origin;
    std::string path;
};

Endpoint split_endpoint(const std::string& uri) {
    const auto scheme_end = uri.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint lacks a scheme: " + uri);
    const auto scheme = uri.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::InvalidArgument, "unsupported endpoint scheme: " + scheme);
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") throw Error(ErrorCode::InvalidArgument, "built without TLS support: " + uri);
#endif
    const auto path_start = uri.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {uri, "/"};
    return {uri.substr(0, path_start), uri.substr(path_start)};
}

std::chrono::duration<double> seconds(double s) { return std::chrono::duration<double>(s); }

void set_timeouts(httplib::Client& client, double timeout_s) {
    const auto us = static_cast<long long>(std::llround(timeout_s * 1e6));
    const auto sec = static_cast<time_t>(us / 1000000);
    const auto usec = static_cast<time_t>(us % 1000000);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpTransport::HttpTransport(AdapterConfig config)
    : config_(std::move(config)), gate_(config_.max_in_flight == 0 ? 1 : config_.max_in_flight) {
    config_.backend_kind = BackendKind::Http;
    config_.validate();
    auto ep = split_endpoint(*config_.endpoint);
    origin_ = std::move(ep.origin);
    path_ = std::move(ep.path);
}

HttpTransport::~HttpTransport() = default;

std::unique_ptr<httplib::Client> HttpTransport::checkout() {
    {
        std::lock_guard lock(pool_mutex_);
        if (!pool_.empty()) {
            auto client = std::move(pool_.back());
            pool_.pop_back();
            return client;
        }
    }
    auto client = std::make_unique<httplib::Client>(origin_);
    set_timeouts(*client, config_.timeout_s);
    client->set_keep_alive(true);
    if (config_.credential_ref) {
        if (const char* token = std::getenv(config_.credential_ref->c_str()); token && *token) {
            client->set_bearer_token_auth(token);
        }
    }
    return client;
}

void HttpTransport::checkin(std::unique_ptr<httplib::Client> client) {
    std::lock_guard lock(pool_mutex_);
    pool_.push_back(std::move(client));
}

HttpResult HttpTransport::invoke(const json& request) {
    const std::string body = request.dump();
    std::string last_failure;
    for (int attempt = 0; attempt < config_.retry.attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(seconds(config_.retry.backoff_base_s * std::pow(2.0, attempt - 1)));
        }
        auto ticket = gate_.acquire();
        auto client = checkout();
        auto res = client->Post(path_, body, "application/json");
        if (!res) {
            // Connection state is unknown after a transport error; drop the client.
            last_failure = httplib::to_string(res.error());
            continue;
        }
        const int status = res->status;
        const std::string response_body = res->body;
        checkin(std::move(client));
        if (status >= 200 && status < 300) {
            try {
                return {json::parse(response_body), attempt};
            } catch (const json::parse_error& e) {
                throw Error(ErrorCode::BackendUnavailable,
                            origin_ + path_ + " returned a non-JSON body: " + e.what());
            }
        }
        if (!retryable_status(status)) {
            throw Error(ErrorCode::SemanticRejection,
                        origin_ + path_ + " rejected the request with HTTP " + std::to_string(status) + ": " +
                            response_body.substr(0, 200));
        }
        last_failure = "HTTP " + std::to_string(status);
    }
    throw Error(ErrorCode::BackendUnavailable, origin_ + path_ + " unavailable after " +
                                                   std::to_string(config_.retry.attempts) +
                                                   " attempt(s): " + last_failure);
}

HttpResult http_invoke(const AdapterConfig& config, const json& request_payload) {
    HttpTransport transport(config);
    return transport.invoke(request_payload);
}

// ---------------------------------------------------------------------------

HttpLanguageModel::HttpLanguageModel(AdapterConfig config) : transport_(std::move(config)) {}

std::string HttpLanguageModel::complete(const LlmRequest& request) {
    const json payload = {{"model_id", request.model_id},
                          {"prompt", request.prompt},
                          {"temperature", request.temperature},
                          {"max_tokens", request.max_tokens}};
    try {
        const auto result = transport_.invoke(payload);
        if (!result.payload.is_object() || !result.payload.contains("text") || !result.payload["text"].is_string()) {
            throw Error(ErrorCode::LlmUnavailable, "language model response lacks a \"text\" string");
        }
        return result.payload["text"].get<std::string>();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::LlmUnavailable) throw;
        throw Error(ErrorCode::LlmUnavailable, std::string(to_string(e.code())) + ": " + e.what());
    }
}

HttpSearchEngine::HttpSearchEngine(AdapterConfig config) : transport_(std::move(config)) {}

std::vector<EvidenceItem> HttpSearchEngine::web_search(const std::string& query, std::size_t k) {
    if (query.empty()) throw Error(ErrorCode::InvalidArgument, "empty search query");
    json results;
    try {
        results = transport_.invoke({{"query", query}, {"k", k}}).payload;
    } catch (const Error& e) {
        throw Error(ErrorCode::SearchUnavailable, std::string(to_string(e.code())) + ": " + e.what());
    }
    if (!results.is_array()) throw Error(ErrorCode::SearchUnavailable, "search response is not an array");
    std::vector<EvidenceItem> items;
    for (const auto& r : results) {
        if (items.size() >= k) break;
        if (!r.is_object()) continue;
        EvidenceItem item{query, r.value("title", ""), r.value("snippet", ""), r.value("url", "")};
        if (item.snippet.empty()) continue;
        items.push_back(std::move(item));
    }
    return items;
}

// ---------------------------------------------------------------------------

HttpMediaService::HttpMediaService(AdapterConfig config, std::size_t declared_dimension)
    : transport_(std::move(config)), dimension_(declared_dimension) {}

json HttpMediaService::call(const json& request, ErrorCode rejection_code) {
    try {
        return transport_.invoke(request).payload;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SemanticRejection) throw Error(rejection_code, e.what());
        throw;
    }
}

MediaInfo HttpMediaService::probe(const VideoRef& video) {
    const auto r = call({{"op", "probe"}, {"media_locator", video.media_locator}}, ErrorCode::MediaUnreadable);
    try {
        MediaInfo info{r.at("duration_s").get<double>(), std::nullopt};
        if (r.contains("fps") && !r["fps"].is_null()) info.fps = r["fps"].get<double>();
        return info;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MediaUnreadable, std::string("malformed probe response: ") + e.what());
    }
}

Frame HttpMediaService::frame_at(const VideoRef& video, const FrameSample& sample) {
    return {video.media_locator, sample.frame_index, sample.timestamp_s};
}

std::vector<FaceDetection> HttpMediaService::detect_faces(const Frame& frame) {
    if (frame.handle.empty()) throw Error(ErrorCode::DecodeFailure, "empty frame handle");
    const auto r = call({{"op", "detect"},
                         {"media_locator", frame.handle},
                         {"frame_index", frame.frame_index},
                         {"timestamp_s", frame.timestamp_s}},
                        ErrorCode::DecodeFailure);
    std::vector<FaceDetection> out;
    try {
        for (const auto& f : r.at("faces")) {
            const auto box = f.at("bbox").get<std::vector<double>>();
            if (box.size() != 4) throw Error(ErrorCode::DecodeFailure, "bbox must have four numbers");
            out.push_back({frame.frame_index, {box[0], box[1], box[2], box[3]}, f.at("crop_ref").get<std::string>(),
                           f.at("conf").get<double>()});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::DecodeFailure, std::string("malformed detection response: ") + e.what());
    }
    return out;
}

std::vector<double> HttpMediaService::embed_face(std::string_view crop_ref) {
    const auto r = call({{"op", "embed"}, {"crop_ref", crop_ref}}, ErrorCode::BackendUnavailable);
    try {
        auto v = r.at("embedding").get<std::vector<double>>();
        if (dimension_ != 0 && v.size() != dimension_) {
            throw Error(ErrorCode::DimensionMismatch, "embedder returned " + std::to_string(v.size()) +
                                                          " values, declared " + std::to_string(dimension_));
        }
        return v;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("malformed embedding response: ") + e.what());
    }
}

Transcript HttpMediaService::transcribe(const VideoRef& video) {
    const auto r = call({{"op", "transcribe"}, {"media_locator", video.media_locator}}, ErrorCode::MediaUnreadable);
    try {
        Transcript t;
        t.text = r.at("text").get<std::string>();
        if (r.contains("segments")) {
            for (const auto& s : r["segments"]) {
                t.segments.push_back({s.at("start").get<double>(), s.at("end").get<double>(),
                                      s.at("text").get<std::string>()});
            }
        }
        if (r.contains("language") && r["language"].is_string()) t.language_tag = r["language"].get<std::string>();
        return t;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("malformed transcript response: ") + e.what());
    }
}

MediaAdapters make_http_media(const AdapterConfig& config, std::size_t declared_dimension) {
    auto service = std::make_shared<HttpMediaService>(config, declared_dimension);
    return {service, service, service, service};
}

}  // namespace veriflow
