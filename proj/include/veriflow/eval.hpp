#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veriflow/agents.hpp"
#include "veriflow/gallery.hpp"
#include "veriflow/media.hpp"

namespace veriflow {

/// Stage-1 output supplied directly, for Stage-2-only evaluation.
struct PrecomputedInput {
    std::string transcript;
    std::vector<std::string> people;

    friend bool operator==(const PrecomputedInput&, const PrecomputedInput&) = default;
};

struct ManifestEntry {
    std::string video_id;
    Label label = Label::Real;
    /// Exactly one of media_locator / precomputed is set.
    std::optional<std::string> media_locator;
    std::optional<PrecomputedInput> precomputed;
    /// Reference only; never handed to the pipeline.
    std::optional<std::string> source_url;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// JSON-lines, one object per video:
///   {"video_id", "label":"real"|"fake", "media_locator"} or
///   {"video_id", "label", "precomputed":{"transcript", "people":[names]}}, optional "source_url".
/// Blank lines are skipped. Throws ManifestSchemaError, DuplicateVideoId.
std::vector<ManifestEntry> parse_manifest(std::string_view jsonl);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct Split {
    std::vector<ManifestEntry> train;
    std::vector<ManifestEntry> test;
};

/// Per class, round(test_fraction * class size) entries go to test, chosen by a seeded
/// shuffle. Both halves keep the input order. Throws ClassMissing, InvalidArgument.
Split stratified_split(const std::vector<ManifestEntry>& entries, double test_fraction, std::uint64_t seed);

/// Positive class is "fake".
struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Metrics {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, fpr = 0, fnr = 0;
    /// Names of ratios whose denominator was zero; those report 0.
    std::vector<std::string> undefined;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Throws EmptyEvaluation when the matrix is all zeros.
Metrics compute_metrics(const ConfusionMatrix& confusion);

struct PerVideoRow {
    std::string video_id;
    Label label = Label::Real;
    std::optional<Label> predicted;
    std::optional<double> probability;
    std::optional<std::string> error;

    friend bool operator==(const PerVideoRow&, const PerVideoRow&) = default;
};

/// Counts rows that have a prediction; error rows are skipped.
ConfusionMatrix confusion_from_rows(const std::vector<PerVideoRow>& rows);

struct MetricsReport {
    std::string config_label;
    Metrics metrics;
    ConfusionMatrix confusion;
    /// Sorted by video_id.
    std::vector<PerVideoRow> per_video;
    std::size_t error_count = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Everything needed to take one manifest entry to a verdict.
struct Pipeline {
    std::shared_ptr<const GalleryIndex> gallery;
    MediaAdapters media;
    AgentAdapters agents;
    IngestConfig ingest;
    AgentConfig agent;
};

/// Builds the Stage-2 input for `entry`, running Stage 1 for media entries.
VerificationInput prepare_input(const Pipeline& pipeline, const ManifestEntry& entry);

Verdict run_pipeline(const Pipeline& pipeline, const ManifestEntry& entry);

struct EvalConfig {
    std::size_t workers = 1;
    bool fail_fast = false;
    std::string config_label = "default";
};

/// Runs every entry and scores the predictions. Per-entry failures land in the row's
/// error column unless fail_fast, in which case the earliest failing entry's error is
/// rethrown. Throws EmptyEvaluation for an empty manifest.
MetricsReport evaluate(const Pipeline& pipeline, const std::vector<ManifestEntry>& entries,
                       const EvalConfig& config = {});

struct ResultsRow {
    std::string config_label;
    double accuracy = 0.0;
    double f1 = 0.0;
};

/// Pipe-separated table: "Model/Config | Accuracy (%) | F1-Score", then one row per
/// config with accuracy in percent to one decimal and F1 to two.
std::string format_results_table(const std::vector<ResultsRow>& rows);
std::string format_results_row(const ResultsRow& row);

}  // namespace veriflow
