#include "veriflow/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "veriflow/error.hpp"
#include "veriflow/text.hpp"

namespace veriflow {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest

namespace {

[[noreturn]] void manifest_error(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::ManifestSchemaError, "manifest line " + std::to_string(line) + ": " + what);
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
    if (!obj.contains(key) || !obj[key].is_string()) manifest_error(line, std::string("\"") + key + "\" must be a string");
    return obj[key].get<std::string>();
}

ManifestEntry parse_entry(const json& obj, std::size_t line) {
    if (!obj.is_object()) manifest_error(line, "expected a JSON object");
    static const std::set<std::string> known = {"video_id", "label", "media_locator", "precomputed", "source_url"};
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key)) manifest_error(line, "unknown field \"" + key + "\"");
    }
    ManifestEntry e;
    e.video_id = string_field(obj, "video_id", line);
    if (e.video_id.empty()) manifest_error(line, "video_id is empty");
    try {
        e.label = parse_label(string_field(obj, "label", line));
    } catch (const Error& err) {
        if (err.code() == ErrorCode::ManifestSchemaError) throw;
        manifest_error(line, err.what());
    }
    const bool has_media = obj.contains("media_locator");
    const bool has_pre = obj.contains("precomputed");
    if (has_media == has_pre) manifest_error(line, "exactly one of media_locator / precomputed is required");
    if (has_media) e.media_locator = string_field(obj, "media_locator", line);
    if (has_pre) {
        const auto& pre = obj["precomputed"];
        if (!pre.is_object()) manifest_error(line, "\"precomputed\" must be an object");
        PrecomputedInput p;
        p.transcript = string_field(pre, "transcript", line);
        if (pre.contains("people")) {
            if (!pre["people"].is_array()) manifest_error(line, "\"people\" must be an array of names");
            for (const auto& name : pre["people"]) {
                if (!name.is_string()) manifest_error(line, "\"people\" must be an array of names");
                p.people.push_back(name.get<std::string>());
            }
        }
        e.precomputed = std::move(p);
    }
    if (obj.contains("source_url")) e.source_url = string_field(obj, "source_url", line);
    return e;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view jsonl) {
    std::vector<ManifestEntry> entries;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            manifest_error(line_no, std::string("invalid JSON: ") + e.what());
        }
        auto entry = parse_entry(obj, line_no);
        if (!seen.insert(entry.video_id).second) {
            throw Error(ErrorCode::DuplicateVideoId, "duplicate video_id '" + entry.video_id + "' on line " +
                                                         std::to_string(line_no));
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open manifest '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

// ---------------------------------------------------------------------------
// Split

namespace {

/// Uniform draw in [0, bound) by rejection, so the shuffle does not depend on the
/// standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

Split stratified_split(const std::vector<ManifestEntry>& entries, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "test fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < entries.size(); ++i) by_class[entries[i].label == Label::Fake].push_back(i);
    if (by_class[0].empty() || by_class[1].empty()) {
        throw Error(ErrorCode::ClassMissing, "stratified split needs both real and fake entries");
    }

    std::mt19937_64 rng(seed);
    std::vector<bool> in_test(entries.size(), false);
    for (auto& members : by_class) {
        for (std::size_t i = members.size() - 1; i > 0; --i) {
            std::swap(members[i], members[bounded(rng, i + 1)]);
        }
        const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < n_test; ++i) in_test[members[i]] = true;
    }
    Split split;
    for (std::size_t i = 0; i < entries.size(); ++i) (in_test[i] ? split.test : split.train).push_back(entries[i]);
    return split;
}

// ---------------------------------------------------------------------------
// Metrics

Metrics compute_metrics(const ConfusionMatrix& c) {
    if (c.total() == 0) throw Error(ErrorCode::EmptyEvaluation, "no evaluated videos");
    Metrics m;
    auto ratio = [&](const char* name, double num, double den) {
        if (den == 0.0) {
            m.undefined.emplace_back(name);
            return 0.0;
        }
        return num / den;
    };
    const auto tp = static_cast<double>(c.tp);
    const auto fp = static_cast<double>(c.fp);
    const auto tn = static_cast<double>(c.tn);
    const auto fn = static_cast<double>(c.fn);
    m.accuracy = (tp + tn) / static_cast<double>(c.total());
    m.precision = ratio("precision", tp, tp + fp);
    m.recall = ratio("recall", tp, tp + fn);
    m.f1 = ratio("f1", 2.0 * tp, 2.0 * tp + fp + fn);
    m.fpr = ratio("fpr", fp, fp + tn);
    m.fnr = ratio("fnr", fn, fn + tp);
    return m;
}

ConfusionMatrix confusion_from_rows(const std::vector<PerVideoRow>& rows) {
    ConfusionMatrix c;
    for (const auto& r : rows) {
        if (!r.predicted) continue;
        const bool actual_fake = r.label == Label::Fake;
        const bool predicted_fake = *r.predicted == Label::Fake;
        if (actual_fake && predicted_fake) ++c.tp;
        else if (!actual_fake && predicted_fake) ++c.fp;
        else if (!actual_fake) ++c.tn;
        else ++c.fn;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Pipeline

VerificationInput prepare_input(const Pipeline& pipeline, const ManifestEntry& entry) {
    VerificationInput input;
    input.video_id = entry.video_id;
    if (entry.precomputed) {
        input.transcript.text = entry.precomputed->transcript;
        for (const auto& name : entry.precomputed->people) input.people.people.push_back({name, name, 0, 0.0});
        return input;
    }
    if (!entry.media_locator) throw Error(ErrorCode::InvalidArgument, "entry has neither media nor precomputed input");
    if (!pipeline.media.complete()) throw Error(ErrorCode::BackendUnavailable, "media adapters are not configured");
    if (!pipeline.gallery) throw Error(ErrorCode::GalleryEmpty, "no gallery configured");
    VideoRef video{entry.video_id, *entry.media_locator, std::nullopt, std::nullopt};
    auto stage1 = identify_people(video, *pipeline.gallery, pipeline.media, pipeline.ingest);
    input.transcript = std::move(stage1.transcript);
    input.people = std::move(stage1.people);
    return input;
}

Verdict run_pipeline(const Pipeline& pipeline, const ManifestEntry& entry) {
    return verify_video(prepare_input(pipeline, entry), pipeline.agents, pipeline.agent);
}

MetricsReport evaluate(const Pipeline& pipeline, const std::vector<ManifestEntry>& entries, const EvalConfig& config) {
    if (entries.empty()) throw Error(ErrorCode::EmptyEvaluation, "manifest is empty");

    std::vector<PerVideoRow> rows(entries.size());
    std::vector<std::exception_ptr> failures(entries.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};

    auto worker = [&] {
        for (std::size_t i = next++; i < entries.size() && !abort; i = next++) {
            const auto& entry = entries[i];
            PerVideoRow row{entry.video_id, entry.label, std::nullopt, std::nullopt, std::nullopt};
            try {
                const Verdict v = run_pipeline(pipeline, entry);
                row.predicted = v.label;
                row.probability = v.manipulation_probability;
            } catch (const Error& e) {
                row.error = std::string(to_string(e.code())) + ": " + e.what();
                failures[i] = std::make_exception_ptr(e.with_context("video " + entry.video_id));
                if (config.fail_fast) abort = true;
            } catch (const std::exception& e) {
                row.error = std::string("internal: ") + e.what();
                failures[i] = std::current_exception();
                if (config.fail_fast) abort = true;
            }
            rows[i] = std::move(row);
        }
    };
    {
        const std::size_t n = std::clamp<std::size_t>(config.workers, 1, entries.size());
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
        worker();
    }
    if (config.fail_fast) {
        for (const auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    MetricsReport report;
    report.config_label = config.config_label;
    report.per_video = std::move(rows);
    std::sort(report.per_video.begin(), report.per_video.end(),
              [](const PerVideoRow& a, const PerVideoRow& b) { return a.video_id < b.video_id; });
    report.error_count = static_cast<std::size_t>(
        std::count_if(report.per_video.begin(), report.per_video.end(), [](const PerVideoRow& r) { return r.error.has_value(); }));
    report.confusion = confusion_from_rows(report.per_video);
    if (report.confusion.total() > 0) {
        report.metrics = compute_metrics(report.confusion);
    } else {
        report.metrics.undefined = {"accuracy", "precision", "recall", "f1", "fpr", "fnr"};
    }
    return report;
}

// ---------------------------------------------------------------------------
// Table

std::string format_results_row(const ResultsRow& row) {
    return row.config_label + " | " + text::format_fixed(row.accuracy * 100.0, 1) + " | " +
           text::format_fixed(row.f1, 2);
}

std::string format_results_table(const std::vector<ResultsRow>& rows) {
    std::string out = "Model/Config | Accuracy (%) | F1-Score\n";
    for (const auto& r : rows) out += format_results_row(r) + '\n';
    return out;
}

}  // namespace veriflow
