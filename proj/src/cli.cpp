#include "veriflow/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "veriflow/error.hpp"
#include "veriflow/eval.hpp"
#include "veriflow/http_client.hpp"
#include "veriflow/serialize.hpp"
#include "veriflow/text.hpp"

namespace veriflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> gallery;
    std::optional<std::string> fixtures;
    std::optional<double> threshold;
    std::optional<std::size_t> min_frames;
    std::optional<double> stride;
    std::optional<double> temperature;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> model;
    bool fail_fast = false;
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

template <typename T>
T env_number(const char* name, const std::string& raw) {
    try {
        std::size_t used = 0;
        T value{};
        if constexpr (std::is_floating_point_v<T>) {
            value = static_cast<T>(std::stod(raw, &used));
        } else {
            value = static_cast<T>(std::stoull(raw, &used));
        }
        if (used != raw.size()) throw std::invalid_argument(raw);
        return value;
    } catch (const std::exception&) {
        config_error(std::string(name) + " is not a valid number: '" + raw + "'");
    }
}

void apply_adapter_json(AdapterConfig& cfg, const json& j, const std::string& where) {
    if (!j.is_object()) config_error(where + " must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "endpoint") {
            cfg.endpoint = v.get<std::string>();
            cfg.backend_kind = BackendKind::Http;
        } else if (key == "credential_env") {
            cfg.credential_ref = v.get<std::string>();
        } else if (key == "timeout_s") {
            cfg.timeout_s = v.get<double>();
        } else if (key == "max_in_flight") {
            cfg.max_in_flight = v.get<std::size_t>();
        } else if (key == "attempts") {
            cfg.retry.attempts = v.get<int>();
        } else if (key == "backoff_base_s") {
            cfg.retry.backoff_base_s = v.get<double>();
        } else {
            config_error(where + ": unknown key \"" + key + "\"");
        }
    }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        config_error("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) config_error("config file must hold a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "gallery") cfg.gallery_path = v.get<std::string>();
            else if (key == "fixtures") cfg.fixtures_path = v.get<std::string>();
            else if (key == "threshold") cfg.ingest.threshold = v.get<double>();
            else if (key == "min_frames") cfg.ingest.min_frames = v.get<std::size_t>();
            else if (key == "stride") cfg.ingest.stride_s = v.get<double>();
            else if (key == "confidence_floor") cfg.ingest.confidence_floor = v.get<double>();
            else if (key == "temperature") cfg.agent.temperature = v.get<double>();
            else if (key == "model_id") cfg.agent.model_id = v.get<std::string>();
            else if (key == "max_tokens") cfg.agent.max_tokens = v.get<int>();
            else if (key == "k_search") cfg.agent.k_search = v.get<std::size_t>();
            else if (key == "max_queries") cfg.agent.max_queries = v.get<std::size_t>();
            else if (key == "max_retries") cfg.agent.max_retries = v.get<std::size_t>();
            else if (key == "verdict_threshold") cfg.agent.verdict_threshold = v.get<double>();
            else if (key == "dimension") cfg.dimension = v.get<std::size_t>();
            else if (key == "embedding_cap") cfg.embedding_cap = v.get<std::size_t>();
            else if (key == "test_fraction") cfg.test_fraction = v.get<double>();
            else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (key == "workers") cfg.workers = v.get<std::size_t>();
            else if (key == "fail_fast") cfg.fail_fast = v.get<bool>();
            else if (key == "llm") apply_adapter_json(cfg.llm, v, "llm");
            else if (key == "search") apply_adapter_json(cfg.search, v, "search");
            else if (key == "media") apply_adapter_json(cfg.media, v, "media");
            else config_error("config file: unknown key \"" + key + "\"");
        }
    } catch (const json::exception& e) {
        config_error("config file has a value of the wrong type: " + std::string(e.what()));
    }
}

void apply_env(RunConfig& cfg) {
    if (auto v = env("VERIFLOW_GALLERY")) cfg.gallery_path = *v;
    if (auto v = env("VERIFLOW_FIXTURES")) cfg.fixtures_path = *v;
    if (auto v = env("VERIFLOW_THRESHOLD")) cfg.ingest.threshold = env_number<double>("VERIFLOW_THRESHOLD", *v);
    if (auto v = env("VERIFLOW_TEMPERATURE")) cfg.agent.temperature = env_number<double>("VERIFLOW_TEMPERATURE", *v);
    if (auto v = env("VERIFLOW_SEED")) cfg.seed = env_number<std::uint64_t>("VERIFLOW_SEED", *v);
    if (auto v = env("VERIFLOW_WORKERS")) cfg.workers = env_number<std::size_t>("VERIFLOW_WORKERS", *v);
    if (auto v = env("VERIFLOW_MODEL")) cfg.agent.model_id = *v;
    if (auto v = env(kLlmEndpointEnv)) {
        cfg.llm.endpoint = *v;
        cfg.llm.backend_kind = BackendKind::Http;
    }
    if (auto v = env(kSearchEndpointEnv)) {
        cfg.search.endpoint = *v;
        cfg.search.backend_kind = BackendKind::Http;
    }
    if (auto v = env(kMediaEndpointEnv)) {
        cfg.media.endpoint = *v;
        cfg.media.backend_kind = BackendKind::Http;
    }
}

RunConfig resolve(const Flags& flags) {
    RunConfig cfg;
    cfg.llm.credential_ref = kLlmKeyEnv;
    if (flags.config) apply_config_file(cfg, *flags.config);
    apply_env(cfg);
    if (flags.gallery) cfg.gallery_path = *flags.gallery;
    if (flags.fixtures) cfg.fixtures_path = *flags.fixtures;
    if (flags.threshold) cfg.ingest.threshold = *flags.threshold;
    if (flags.min_frames) cfg.ingest.min_frames = *flags.min_frames;
    if (flags.stride) cfg.ingest.stride_s = *flags.stride;
    if (flags.temperature) cfg.agent.temperature = *flags.temperature;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.workers) cfg.workers = *flags.workers;
    if (flags.model) cfg.agent.model_id = *flags.model;
    if (flags.fail_fast) cfg.fail_fast = true;

    if (!(cfg.ingest.threshold > -1.0 && cfg.ingest.threshold <= 1.0)) config_error("threshold must lie in (-1, 1]");
    if (!(cfg.agent.temperature >= 0.0 && cfg.agent.temperature <= 1.0)) config_error("temperature must lie in [0, 1]");
    if (cfg.ingest.min_frames == 0) config_error("min-frames must be at least 1");
    if (!(cfg.ingest.stride_s > 0.0)) config_error("stride must be positive");
    if (cfg.workers == 0) config_error("workers must be at least 1");
    cfg.ingest.workers = cfg.workers;
    return cfg;
}

struct Backends {
    MediaAdapters media;
    AgentAdapters agents;
};

Backends build_backends(const RunConfig& cfg) {
    Backends b;
    if (cfg.fixtures_path) {
        auto fixtures = std::make_shared<const FixtureSet>(load_fixtures(*cfg.fixtures_path));
        b.media = make_mock_media(fixtures);
        b.agents = make_mock_agents(fixtures);
        return b;
    }
    if (cfg.media.backend_kind == BackendKind::Http) b.media = make_http_media(cfg.media);
    if (cfg.llm.backend_kind == BackendKind::Http) b.agents.llm = std::make_shared<HttpLanguageModel>(cfg.llm);
    if (cfg.search.backend_kind == BackendKind::Http) b.agents.search = std::make_shared<HttpSearchEngine>(cfg.search);
    return b;
}

std::shared_ptr<const GalleryIndex> require_gallery(const RunConfig& cfg) {
    if (!cfg.gallery_path) config_error("no gallery configured (use --gallery)");
    return std::make_shared<const GalleryIndex>(load_gallery_file(*cfg.gallery_path, cfg.embedding_cap));
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// gallery build

struct ListedPerson {
    std::string name;
    std::vector<std::vector<double>> embeddings;
    std::vector<std::string> crops;
};

std::vector<std::vector<double>> read_embedding_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open embedding file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
        if (j.is_array() && !j.empty() && j.front().is_array()) return j.get<std::vector<std::vector<double>>>();
        return {j.get<std::vector<double>>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, "'" + path.string() + "' is not an embedding array: " + e.what());
    }
}

std::vector<ListedPerson> read_listing(const fs::path& listing, std::optional<std::size_t>& declared_dimension) {
    std::vector<ListedPerson> persons;
    if (fs::is_directory(listing)) {
        std::vector<fs::path> dirs;
        for (const auto& d : fs::directory_iterator(listing)) {
            if (d.is_directory()) dirs.push_back(d.path());
        }
        std::sort(dirs.begin(), dirs.end());
        for (const auto& dir : dirs) {
            ListedPerson p{dir.filename().string(), {}, {}};
            std::vector<fs::path> files;
            for (const auto& f : fs::directory_iterator(dir)) {
                if (f.is_regular_file() && f.path().extension() == ".json") files.push_back(f.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                for (auto& e : read_embedding_file(f)) p.embeddings.push_back(std::move(e));
            }
            persons.push_back(std::move(p));
        }
        return persons;
    }

    std::ifstream in(listing);
    if (!in) throw Error(ErrorCode::Io, "cannot open listing '" + listing.string() + "'");
    try {
        const json j = json::parse(in);
        if (j.contains("dimension")) declared_dimension = j["dimension"].get<std::size_t>();
        for (const auto& entry : j.at("persons")) {
            ListedPerson p{entry.at("name").get<std::string>(), {}, {}};
            if (entry.contains("embeddings")) p.embeddings = entry["embeddings"].get<std::vector<std::vector<double>>>();
            if (entry.contains("embedding_files")) {
                for (const auto& f : entry["embedding_files"]) {
                    fs::path file = f.get<std::string>();
                    if (file.is_relative()) file = listing.parent_path() / file;
                    for (auto& e : read_embedding_file(file)) p.embeddings.push_back(std::move(e));
                }
            }
            if (entry.contains("crops")) p.crops = entry["crops"].get<std::vector<std::string>>();
            persons.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, "malformed listing: " + std::string(e.what()));
    }
    return persons;
}

int cmd_gallery_build(const RunConfig& cfg, const std::string& listing, const std::string& out_path,
                      std::ostream& out, std::ostream& err) {
    std::optional<std::size_t> dimension;
    auto persons = read_listing(listing, dimension);
    if (persons.empty()) {
        err << "veriflow: empty gallery: the listing names no persons\n";
        return 1;
    }

    MediaAdapters media;
    const bool needs_embedder =
        std::any_of(persons.begin(), persons.end(), [](const ListedPerson& p) { return !p.crops.empty(); });
    if (needs_embedder) {
        media = build_backends(cfg).media;
        if (!media.embedder) throw Error(ErrorCode::BackendUnavailable, "listing has crops but no embedder is configured");
        for (auto& p : persons) {
            for (const auto& crop : p.crops) p.embeddings.push_back(media.embedder->embed_face(crop));
        }
    }
    if (!dimension) {
        for (const auto& p : persons) {
            if (!p.embeddings.empty()) {
                dimension = p.embeddings.front().size();
                break;
            }
        }
    }
    GalleryIndex gallery(dimension.value_or(cfg.dimension), cfg.embedding_cap);
    std::map<std::string, std::size_t> name_counts;
    for (const auto& p : persons) {
        if (name_counts[p.name]++ == 1) {
            err << "veriflow: warning: duplicate person name '" << p.name << "'; assigning distinct ids\n";
        }
        try {
            gallery.add_person(p.name, p.embeddings);
        } catch (const Error& e) {
            throw e.with_context("person '" + p.name + "'");
        }
    }
    save_gallery_file(gallery, out_path);
    emit(out, {{"gallery", out_path},
               {"dimension", gallery.dimension()},
               {"persons", gallery.size()},
               {"embeddings", gallery.embedding_count()}});
    return 0;
}

// ---------------------------------------------------------------------------

json identify_json(const std::string& video_id, const IngestResult& r) {
    json j = r.people;
    j["video_id"] = video_id;
    j["transcript"] = r.transcript;
    return j;
}

int cmd_identify(const RunConfig& cfg, const std::string& locator, std::optional<std::string> video_id,
                 std::optional<double> duration, std::ostream& out) {
    auto gallery = require_gallery(cfg);
    auto backends = build_backends(cfg);
    VideoRef video{video_id.value_or(locator), locator, duration, std::nullopt};
    const auto result = identify_people(video, *gallery, backends.media, cfg.ingest);
    emit(out, identify_json(video.video_id, result));
    return 0;
}

int cmd_verify(const RunConfig& cfg, const std::optional<std::string>& locator,
               const std::optional<std::string>& transcript, const std::vector<std::string>& people,
               std::optional<std::string> video_id, std::ostream& out) {
    if (locator && (transcript || !people.empty())) {
        config_error("give either a media locator or --transcript/--person, not both");
    }
    auto backends = build_backends(cfg);
    Pipeline pipeline;
    pipeline.media = backends.media;
    pipeline.agents = backends.agents;
    pipeline.ingest = cfg.ingest;
    pipeline.agent = cfg.agent;

    ManifestEntry entry;
    if (locator) {
        pipeline.gallery = require_gallery(cfg);
        entry.video_id = video_id.value_or(*locator);
        entry.media_locator = *locator;
    } else {
        entry.video_id = video_id.value_or("input");
        entry.precomputed = PrecomputedInput{transcript.value_or(""), people};
    }
    const Verdict verdict = run_pipeline(pipeline, entry);
    json j = verdict;
    j["video_id"] = entry.video_id;
    emit(out, j);
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& manifest_path, const std::optional<std::string>& label,
                 const std::optional<std::string>& report_json, const std::optional<std::string>& report_table,
                 std::ostream& out, std::ostream& err) {
    auto entries = load_manifest(manifest_path);
    if (cfg.test_fraction) entries = stratified_split(entries, *cfg.test_fraction, cfg.seed).test;

    auto backends = build_backends(cfg);
    Pipeline pipeline;
    if (cfg.gallery_path) pipeline.gallery = require_gallery(cfg);
    pipeline.media = backends.media;
    pipeline.agents = backends.agents;
    pipeline.ingest = cfg.ingest;
    pipeline.agent = cfg.agent;

    EvalConfig eval;
    eval.workers = cfg.workers;
    eval.fail_fast = cfg.fail_fast;
    eval.config_label =
        label.value_or(cfg.agent.model_id + " (T=" + text::format_fixed(cfg.agent.temperature, 1) + ")");

    const MetricsReport report = evaluate(pipeline, entries, eval);
    const json j = report;
    const std::string table =
        format_results_table({{report.config_label, report.metrics.accuracy, report.metrics.f1}});
    if (report_json) {
        std::ofstream f(*report_json);
        if (!f) throw Error(ErrorCode::Io, "cannot write '" + *report_json + "'");
        f << j.dump(2) << '\n';
    }
    if (report_table) {
        std::ofstream f(*report_table);
        if (!f) throw Error(ErrorCode::Io, "cannot write '" + *report_table + "'");
        f << table;
    }
    emit(out, j);
    err << table;
    if (report.error_count > 0) {
        err << "veriflow: " << report.error_count << " video(s) failed; see the error column\n";
        return 1;
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-stage deepfake fact-checking: identity recognition and multi-agent verification", "veriflow"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags flags;
    app.add_option("--config", flags.config, "JSON config file");
    app.add_option("--gallery", flags.gallery, "Gallery file");
    app.add_option("--fixtures", flags.fixtures, "Fixture file; activates the scripted mock backends");
    app.add_option("--threshold", flags.threshold, "Face match threshold in (-1, 1]");
    app.add_option("--min-frames", flags.min_frames, "Frames a person must be matched in");
    app.add_option("--stride", flags.stride, "Seconds between sampled frames");
    app.add_option("--temperature", flags.temperature, "Language model temperature in [0, 1]");
    app.add_option("--seed", flags.seed, "Seed for the stratified split");
    app.add_option("--workers", flags.workers, "Parallel workers");
    app.add_option("--model", flags.model, "Language model id sent to the backend");
    app.add_flag("--fail-fast", flags.fail_fast, "Stop at the first failing video");

    auto* gallery_cmd = app.add_subcommand("gallery", "Gallery maintenance");
    gallery_cmd->require_subcommand(1);
    gallery_cmd->fallthrough();
    auto* build_cmd = gallery_cmd->add_subcommand("build", "Build a gallery from a listing file or directory");
    std::string listing, gallery_out;
    build_cmd->add_option("listing", listing, "Listing JSON or directory of per-person folders")->required();
    build_cmd->add_option("-o,--out", gallery_out, "Output gallery path")->required();
    build_cmd->fallthrough();

    auto* identify_cmd = app.add_subcommand("identify", "Stage 1: recognized people and transcript");
    std::string identify_locator;
    std::optional<std::string> video_id;
    std::optional<double> duration;
    identify_cmd->add_option("media", identify_locator, "Media locator")->required();
    identify_cmd->add_option("--video-id", video_id, "Identifier reported in the output");
    identify_cmd->add_option("--duration", duration, "Known duration in seconds");
    identify_cmd->fallthrough();

    auto* verify_cmd = app.add_subcommand("verify", "Both stages: authenticity verdict");
    std::optional<std::string> verify_locator, transcript;
    std::vector<std::string> people;
    verify_cmd->add_option("media", verify_locator, "Media locator (omit to pass Stage-1 output directly)");
    verify_cmd->add_option("--transcript", transcript, "Transcript text");
    verify_cmd->add_option("--person", people, "Recognized person (repeatable)");
    verify_cmd->add_option("--video-id", video_id, "Identifier reported in the output");
    verify_cmd->fallthrough();

    auto* eval_cmd = app.add_subcommand("evaluate", "Score the pipeline on a labeled manifest");
    std::string manifest;
    std::optional<std::string> label, report_json, report_table;
    std::optional<double> test_fraction;
    eval_cmd->add_option("manifest", manifest, "JSON-lines manifest")->required();
    eval_cmd->add_option("--test-fraction", test_fraction, "Evaluate only a stratified test split of this size");
    eval_cmd->add_option("--label", label, "Model/config label for the results table");
    eval_cmd->add_option("--report-json", report_json, "Also write the JSON report here");
    eval_cmd->add_option("--report-table", report_table, "Also write the text table here");
    eval_cmd->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "veriflow: " << e.what() << '\n';
        return 2;
    }

    try {
        RunConfig cfg = resolve(flags);
        if (test_fraction) cfg.test_fraction = *test_fraction;
        if (*build_cmd) return cmd_gallery_build(cfg, listing, gallery_out, out, err);
        if (*identify_cmd) return cmd_identify(cfg, identify_locator, video_id, duration, out);
        if (*verify_cmd) return cmd_verify(cfg, verify_locator, transcript, people, video_id, out);
        if (*eval_cmd) return cmd_evaluate(cfg, manifest, label, report_json, report_table, out, err);
    } catch (const Error& e) {
        err << "veriflow: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "veriflow: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace veriflow::cli
