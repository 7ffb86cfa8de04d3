#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veriflow/media.hpp"

namespace veriflow {

enum class AgentRole { Attribution, Verification, Consolidation };

std::string_view to_string(AgentRole role);

/// Attribution agents answer Plausible/Implausible; verification agents True/False/Unverifiable.
enum class Judgment { Plausible, Implausible, True, False, Unverifiable };

std::string_view to_string(Judgment judgment);

/// Stage-2 input: only the transcript and the recognized people. `video_id` is kept for
/// bookkeeping and digests and never reaches a prompt or search query.
struct VerificationInput {
    Transcript transcript;
    IdentifiedPeople people;
    std::string video_id;
};

struct AgentPrompt {
    AgentRole role = AgentRole::Attribution;
    std::string text;
    double temperature = 0.5;
    /// Web searches the agent issues before answering; results are appended to `text`.
    std::vector<std::string> search_queries;
};

struct EvidenceItem {
    std::string query;
    std::string title;
    std::string snippet;
    std::string url;

    friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

struct AgentAnalysis {
    AgentRole role = AgentRole::Attribution;
    Judgment judgment = Judgment::Plausible;
    /// Verification role only.
    bool ethical_flag = false;
    double confidence = 0.0;
    std::string reasoning;
    std::vector<EvidenceItem> evidence;
    /// Malformed replies discarded before this one parsed.
    std::size_t retries = 0;
    /// Set when a web search failed and the agent answered without that evidence.
    bool search_degraded = false;

    friend bool operator==(const AgentAnalysis&, const AgentAnalysis&) = default;
};

struct Verdict {
    Label label = Label::Real;
    double manipulation_probability = 0.0;
    std::string reasoning;
    std::string inputs_digest;
    /// True when the input carried nothing to verify and no agent was consulted.
    bool short_circuited = false;
    std::optional<AgentAnalysis> attribution;
    std::optional<AgentAnalysis> verification;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

// ---------------------------------------------------------------------------
// Backend contracts

struct LlmRequest {
    std::string model_id;
    std::string prompt;
    double temperature = 0.5;
    int max_tokens = 1024;
};

class LanguageModel {
public:
    virtual ~LanguageModel() = default;
    /// Returns the raw completion text. Throws LlmUnavailable.
    virtual std::string complete(const LlmRequest& request) = 0;
};

class SearchEngine {
public:
    virtual ~SearchEngine() = default;
    /// At most `k` items. Throws SearchUnavailable.
    virtual std::vector<EvidenceItem> web_search(const std::string& query, std::size_t k) = 0;
};

struct AgentAdapters {
    std::shared_ptr<LanguageModel> llm;
    /// Optional; agents run without evidence when absent.
    std::shared_ptr<SearchEngine> search;
};

enum class AgentSchedule { Concurrent, AttributionFirst, VerificationFirst };

struct AgentConfig {
    std::string model_id = "default";
    double temperature = 0.5;
    int max_tokens = 1024;
    std::size_t k_search = 5;
    std::size_t max_queries = 3;
    std::size_t max_retries = 3;
    double verdict_threshold = 0.5;
    /// Short-circuit verdicts report probability verdict_threshold - this.
    double short_circuit_epsilon = 0.05;
    /// Multiplies an agent's confidence when its web search failed.
    double degraded_confidence_factor = 0.8;
    AgentSchedule schedule = AgentSchedule::Concurrent;
};

// ---------------------------------------------------------------------------
// Prompts

AgentPrompt build_attribution_prompt(const VerificationInput& input, const AgentConfig& config = {});
AgentPrompt build_verification_prompt(const VerificationInput& input, const AgentConfig& config = {});
AgentPrompt build_consolidation_prompt(const AgentAnalysis& attribution, const AgentAnalysis& verification,
                                       const AgentConfig& config = {});

/// Leading claim phrases of a transcript: sentences of three or more words, cut to twelve words.
std::vector<std::string> extract_claim_phrases(std::string_view transcript, std::size_t max_phrases);

/// The prompt sent after `attempt` malformed replies (attempt >= 1).
std::string retry_prompt(std::string_view prompt_text, std::size_t attempt);

/// `prompt.text` plus the rendered evidence section. This is the first text sent to the model.
std::string render_agent_request(const AgentPrompt& prompt, const std::vector<EvidenceItem>& evidence,
                                 bool search_failed);

// ---------------------------------------------------------------------------
// Structured output
//
//   BEGIN_ANALYSIS
//   judgment: implausible
//   confidence: 0.9
//   ethical_flag: true              (verification only)
//   evidence: <url> | <snippet>     (repeatable)
//   reasoning: free text, may span lines up to the closing fence
//   END_ANALYSIS
//
// Verdicts use BEGIN_VERDICT/END_VERDICT with label, probability and reasoning keys.
// When a reply holds several blocks the last complete one wins.

/// Throws MalformedOutput.
AgentAnalysis parse_agent_output(std::string_view text, AgentRole role);
std::string serialize_analysis(const AgentAnalysis& analysis);

struct VerdictBlock {
    Label label = Label::Real;
    double probability = 0.0;
    std::string reasoning;

    friend bool operator==(const VerdictBlock&, const VerdictBlock&) = default;
};

/// Throws MalformedOutput.
VerdictBlock parse_verdict_output(std::string_view text);
std::string serialize_verdict(const VerdictBlock& block);

// ---------------------------------------------------------------------------
// Orchestration

/// Runs the prompt's searches (failures only degrade), queries the model and parses the
/// reply, re-asking up to config.max_retries times. Throws LlmUnavailable,
/// MalformedOutputAfterRetries.
AgentAnalysis run_agent(const AgentPrompt& prompt, LanguageModel& llm, SearchEngine* search,
                        const AgentConfig& config = {});

/// Final model call. Probability governs: the label is recomputed from it.
Verdict consolidate(const AgentAnalysis& attribution, const AgentAnalysis& verification, LanguageModel& llm,
                    const AgentConfig& config = {});

/// Stable digest over every field of the input.
std::string inputs_digest(const VerificationInput& input);

/// Stage 2: attribution and verification agents (independent), then consolidation.
Verdict verify_video(const VerificationInput& input, const AgentAdapters& adapters, const AgentConfig& config = {});

}  // namespace veriflow
