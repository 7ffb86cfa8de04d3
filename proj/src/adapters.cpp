#include "veriflow/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "veriflow/error.hpp"
#include "veriflow/text.hpp"

namespace veriflow {

using nlohmann::json;

void AdapterConfig::validate() const {
    if (backend_kind == BackendKind::Http && (!endpoint || endpoint->empty())) {
        throw Error(ErrorCode::InvalidArgument, "http backend requires an endpoint");
    }
    if (!(timeout_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "timeout_s must be positive");
    if (retry.attempts < 1) throw Error(ErrorCode::InvalidArgument, "retry attempts must be at least 1");
    if (retry.backoff_base_s < 0.0) throw Error(ErrorCode::InvalidArgument, "backoff must be non-negative");
    if (max_in_flight == 0) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be at least 1");
}

// ---------------------------------------------------------------------------

ConcurrencyGate::ConcurrencyGate(std::size_t max_in_flight) : capacity_(max_in_flight) {
    if (capacity_ == 0) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be at least 1");
}

ConcurrencyGate::Ticket ConcurrencyGate::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < capacity_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
    return Ticket(this);
}

void ConcurrencyGate::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_one();
}

std::size_t ConcurrencyGate::in_flight() const {
    std::lock_guard lock(mutex_);
    return in_flight_;
}

std::size_t ConcurrencyGate::peak() const {
    std::lock_guard lock(mutex_);
    return peak_;
}

// ---------------------------------------------------------------------------
// Fixture parsing

namespace {

[[noreturn]] void schema_error(const std::string& what) { throw Error(ErrorCode::FixtureSchemaError, what); }

const json& expect(const json& obj, const char* key, json::value_t type, const std::string& where) {
    if (!obj.contains(key)) schema_error(where + ": missing \"" + key + "\"");
    const json& v = obj.at(key);
    const bool ok = type == json::value_t::number_float ? v.is_number() : v.type() == type;
    if (!ok) schema_error(where + ": \"" + key + "\" has the wrong type");
    return v;
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    return expect(obj, key, json::value_t::number_float, where).get<double>();
}

std::vector<double> number_array(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) schema_error(where + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

VideoFixture parse_video(const json& obj, const std::string& where) {
    if (!obj.is_object()) schema_error(where + ": expected an object");
    VideoFixture video;
    video.transcript.text = expect(obj, "transcript", json::value_t::string, where).get<std::string>();
    if (obj.contains("segments")) {
        for (const auto& s : expect(obj, "segments", json::value_t::array, where)) {
            const auto w = where + ".segments";
            if (!s.is_object()) schema_error(w + ": expected objects");
            video.transcript.segments.push_back({expect(s, "start", json::value_t::number_float, w).get<double>(),
                                                 expect(s, "end", json::value_t::number_float, w).get<double>(),
                                                 expect(s, "text", json::value_t::string, w).get<std::string>()});
        }
    }
    if (obj.contains("language")) {
        video.transcript.language_tag = expect(obj, "language", json::value_t::string, where).get<std::string>();
    }
    try {
        validate_transcript(video.transcript);
    } catch (const Error& e) {
        schema_error(where + ": " + e.what());
    }
    video.duration_s = optional_number(obj, "duration_s", where);
    video.fps = optional_number(obj, "fps", where);
    if (video.fps && !(*video.fps > 0.0)) schema_error(where + ": fps must be positive");

    if (obj.contains("frames")) {
        for (const auto& [key, dets] : expect(obj, "frames", json::value_t::object, where).items()) {
            const auto w = where + ".frames[" + key + "]";
            std::int64_t index = 0;
            try {
                std::size_t used = 0;
                index = std::stoll(key, &used);
                if (used != key.size() || index < 0) throw std::invalid_argument(key);
            } catch (const std::exception&) {
                schema_error(w + ": frame keys must be non-negative integers");
            }
            if (!dets.is_array()) schema_error(w + ": expected an array of detections");
            auto& list = video.frames[index];
            for (const auto& d : dets) {
                if (!d.is_object()) schema_error(w + ": expected detection objects");
                const auto box = number_array(expect(d, "bbox", json::value_t::array, w), w + ".bbox");
                if (box.size() != 4) schema_error(w + ".bbox: expected [x, y, w, h]");
                list.push_back({{box[0], box[1], box[2], box[3]},
                                expect(d, "conf", json::value_t::number_float, w).get<double>(),
                                expect(d, "embedding_key", json::value_t::string, w).get<std::string>()});
            }
        }
    }
    return video;
}

}  // namespace

const VideoFixture* FixtureSet::video_for(std::string_view media_locator) const {
    if (videos.empty()) return &default_video;
    auto it = videos.find(std::string(media_locator));
    return it == videos.end() ? nullptr : &it->second;
}

std::string prompt_key(std::string_view prompt) { return text::hash_hex(prompt); }

FixtureSet parse_fixtures(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        schema_error(std::string("fixture is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) schema_error("fixture root must be an object");

    FixtureSet set;
    set.default_video = parse_video(doc, "fixture");
    if (doc.contains("videos")) {
        for (const auto& [locator, v] : expect(doc, "videos", json::value_t::object, "fixture").items()) {
            set.videos.emplace(locator, parse_video(v, "videos[" + locator + "]"));
        }
    }
    if (doc.contains("embeddings")) {
        for (const auto& [key, v] : expect(doc, "embeddings", json::value_t::object, "fixture").items()) {
            set.embeddings.emplace(key, number_array(v, "embeddings[" + key + "]"));
        }
    }
    if (doc.contains("dimension")) {
        set.dimension = expect(doc, "dimension", json::value_t::number_unsigned, "fixture").get<std::size_t>();
    }
    for (const auto& [key, v] : set.embeddings) {
        if (!set.dimension) set.dimension = v.size();
        if (v.size() != *set.dimension) schema_error("embeddings[" + key + "]: inconsistent dimension");
    }
    if (doc.contains("search")) {
        for (const auto& [query, results] : expect(doc, "search", json::value_t::object, "fixture").items()) {
            const auto w = "search[" + query + "]";
            if (!results.is_array()) schema_error(w + ": expected an array");
            auto& items = set.search[query];
            for (const auto& r : results) {
                if (!r.is_object()) schema_error(w + ": expected result objects");
                items.push_back({query, expect(r, "title", json::value_t::string, w).get<std::string>(),
                                 expect(r, "snippet", json::value_t::string, w).get<std::string>(),
                                 expect(r, "url", json::value_t::string, w).get<std::string>()});
            }
        }
    }
    if (doc.contains("search_unavailable")) {
        set.search_unavailable = expect(doc, "search_unavailable", json::value_t::boolean, "fixture").get<bool>();
    }
    if (doc.contains("llm")) {
        for (const auto& [key, reply] : expect(doc, "llm", json::value_t::object, "fixture").items()) {
            if (!reply.is_string()) schema_error("llm[" + key + "]: expected a string");
            set.llm.emplace(key, reply.get<std::string>());
        }
    }
    return set;
}

FixtureSet load_fixtures(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) schema_error("cannot read fixture file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    FixtureSet set = parse_fixtures(buf.str());
    set.path = path;
    return set;
}

// ---------------------------------------------------------------------------
// Mocks

MockMedia::MockMedia(std::shared_ptr<const FixtureSet> fixtures) : fixtures_(std::move(fixtures)) {}

const VideoFixture& MockMedia::video(std::string_view locator) const {
    const auto* v = fixtures_->video_for(locator);
    if (!v) throw Error(ErrorCode::MediaUnreadable, "no media at '" + std::string(locator) + "'");
    return *v;
}

MediaInfo MockMedia::probe(const VideoRef& ref) {
    const auto& v = video(ref.media_locator);
    const double fps = v.fps.value_or(1.0);
    double duration = 0.0;
    if (v.duration_s) {
        duration = *v.duration_s;
    } else if (!v.frames.empty()) {
        duration = static_cast<double>(v.frames.rbegin()->first + 1) / fps;
    }
    return {duration, fps};
}

Frame MockMedia::frame_at(const VideoRef& ref, const FrameSample& sample) {
    video(ref.media_locator);
    return {ref.media_locator + "#" + std::to_string(sample.frame_index), sample.frame_index, sample.timestamp_s};
}

std::vector<FaceDetection> MockMedia::detect_faces(const Frame& frame) {
    const auto hash = frame.handle.rfind('#');
    if (hash == std::string::npos) throw Error(ErrorCode::DecodeFailure, "malformed frame handle '" + frame.handle + "'");
    const auto locator = std::string_view(frame.handle).substr(0, hash);
    const auto* v = fixtures_->video_for(locator);
    std::int64_t index = -1;
    try {
        std::size_t used = 0;
        const std::string tail = frame.handle.substr(hash + 1);
        index = std::stoll(tail, &used);
        if (used != tail.size()) index = -1;
    } catch (const std::exception&) {
        index = -1;
    }
    if (!v || index < 0) throw Error(ErrorCode::DecodeFailure, "malformed frame handle '" + frame.handle + "'");

    std::vector<FaceDetection> out;
    auto it = v->frames.find(index);
    if (it == v->frames.end()) return out;
    for (const auto& d : it->second) out.push_back({index, d.bbox, d.embedding_key, d.confidence});
    return out;
}

std::vector<double> MockMedia::embed_face(std::string_view crop_ref) {
    auto it = fixtures_->embeddings.find(std::string(crop_ref));
    if (it == fixtures_->embeddings.end()) {
        throw Error(ErrorCode::BackendUnavailable, "no scripted embedding for crop '" + std::string(crop_ref) + "'");
    }
    return it->second;
}

std::size_t MockMedia::dimension() const { return fixtures_->dimension.value_or(0); }

Transcript MockMedia::transcribe(const VideoRef& ref) { return video(ref.media_locator).transcript; }

MockLanguageModel::MockLanguageModel(std::shared_ptr<const FixtureSet> fixtures) : fixtures_(std::move(fixtures)) {}

std::string MockLanguageModel::complete(const LlmRequest& request) {
    const auto key = prompt_key(request.prompt);
    auto it = fixtures_->llm.find(key);
    if (it == fixtures_->llm.end()) throw Error(ErrorCode::LlmUnavailable, "no scripted reply for prompt " + key);
    return it->second;
}

MockSearchEngine::MockSearchEngine(std::shared_ptr<const FixtureSet> fixtures) : fixtures_(std::move(fixtures)) {}

std::vector<EvidenceItem> MockSearchEngine::web_search(const std::string& query, std::size_t k) {
    if (text::trim(query).empty()) throw Error(ErrorCode::InvalidArgument, "empty search query");
    if (fixtures_->search_unavailable) throw Error(ErrorCode::SearchUnavailable, "scripted search outage");
    auto it = fixtures_->search.find(query);
    if (it == fixtures_->search.end()) return {};
    std::vector<EvidenceItem> out(it->second.begin(), it->second.begin() + std::min(k, it->second.size()));
    return out;
}

MediaAdapters make_mock_media(std::shared_ptr<const FixtureSet> fixtures) {
    auto media = std::make_shared<MockMedia>(std::move(fixtures));
    return {media, media, media, media};
}

AgentAdapters make_mock_agents(std::shared_ptr<const FixtureSet> fixtures) {
    return {std::make_shared<MockLanguageModel>(fixtures), std::make_shared<MockSearchEngine>(fixtures)};
}

// ---------------------------------------------------------------------------
// Recording

void PayloadLog::record(std::string channel, std::string payload) {
    std::lock_guard lock(mutex_);
    entries_.emplace_back(std::move(channel), std::move(payload));
}

std::vector<std::pair<std::string, std::string>> PayloadLog::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t PayloadLog::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

RecordingLanguageModel::RecordingLanguageModel(std::shared_ptr<LanguageModel> inner, std::shared_ptr<PayloadLog> log)
    : inner_(std::move(inner)), log_(std::move(log)) {}

std::string RecordingLanguageModel::complete(const LlmRequest& request) {
    json payload = {{"model_id", request.model_id},
                    {"prompt", request.prompt},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_tokens}};
    log_->record("llm", payload.dump());
    return inner_->complete(request);
}

RecordingSearchEngine::RecordingSearchEngine(std::shared_ptr<SearchEngine> inner, std::shared_ptr<PayloadLog> log)
    : inner_(std::move(inner)), log_(std::move(log)) {}

std::vector<EvidenceItem> RecordingSearchEngine::web_search(const std::string& query, std::size_t k) {
    log_->record("search", json{{"query", query}, {"k", k}}.dump());
    return inner_->web_search(query, k);
}

AgentAdapters record_payloads(const AgentAdapters& adapters, std::shared_ptr<PayloadLog> log) {
    AgentAdapters out;
    if (adapters.llm) out.llm = std::make_shared<RecordingLanguageModel>(adapters.llm, log);
    if (adapters.search) out.search = std::make_shared<RecordingSearchEngine>(adapters.search, log);
    return out;
}

}  // namespace veriflow
