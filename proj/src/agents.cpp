#include "veriflow/agents.hpp"

#include <algorithm>
#include <future>

#include "veriflow/error.hpp"
#include "veriflow/text.hpp"

namespace veriflow {

namespace {

struct Retrieval {
    std::vector<EvidenceItem> items;
    bool failed = false;
};

Retrieval gather_evidence(const AgentPrompt& prompt, SearchEngine* search, std::size_t k) {
    Retrieval r;
    if (!search || k == 0) return r;
    for (const auto& query : prompt.search_queries) {
        std::vector<EvidenceItem> hits;
        try {
            hits = search->web_search(query, k);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SearchUnavailable) throw;
            r.failed = true;
            continue;
        }
        if (hits.size() > k) hits.resize(k);
        for (auto& h : hits) {
            if (text::trim(h.snippet).empty()) continue;
            h.query = query;
            r.items.push_back(std::move(h));
        }
    }
    return r;
}

/// Fills query/title on cited items that came from this agent's own retrieval.
void link_citations(std::vector<EvidenceItem>& cited, const std::vector<EvidenceItem>& retrieved) {
    for (auto& c : cited) {
        auto it = std::find_if(retrieved.begin(), retrieved.end(),
                               [&](const EvidenceItem& r) { return !r.url.empty() && r.url == c.url; });
        if (it != retrieved.end()) {
            c.query = it->query;
            c.title = it->title;
        }
    }
}

template <typename Parse>
auto ask_with_retries(LanguageModel& llm, const std::string& request_text, double temperature,
                      const AgentConfig& config, Parse parse) {
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
        LlmRequest request{config.model_id, attempt == 0 ? request_text : retry_prompt(request_text, attempt),
                           temperature, config.max_tokens};
        const std::string reply = llm.complete(request);
        try {
            return std::make_pair(parse(reply), attempt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MalformedOutput) throw;
            last_error = e.what();
        }
    }
    throw Error(ErrorCode::MalformedOutputAfterRetries,
                "no parseable reply after " + std::to_string(config.max_retries + 1) + " attempts: " + last_error);
}

double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

AgentAnalysis run_agent(const AgentPrompt& prompt, LanguageModel& llm, SearchEngine* search,
                        const AgentConfig& config) {
    if (prompt.role == AgentRole::Consolidation) {
        throw Error(ErrorCode::InvalidArgument, "run_agent handles attribution and verification prompts");
    }
    if (text::trim(prompt.text).empty()) throw Error(ErrorCode::InvalidArgument, "empty agent prompt");

    const Retrieval retrieval = gather_evidence(prompt, search, config.k_search);
    const std::string request = render_agent_request(prompt, retrieval.items, retrieval.failed);
    auto [analysis, retries] = ask_with_retries(llm, request, prompt.temperature, config, [&](const std::string& reply) {
        return parse_agent_output(reply, prompt.role);
    });
    analysis.retries = retries;
    link_citations(analysis.evidence, retrieval.items);
    if (retrieval.failed) {
        analysis.search_degraded = true;
        analysis.confidence = clamp_probability(analysis.confidence * config.degraded_confidence_factor);
    }
    return analysis;
}

Verdict consolidate(const AgentAnalysis& attribution, const AgentAnalysis& verification, LanguageModel& llm,
                    const AgentConfig& config) {
    const AgentPrompt prompt = build_consolidation_prompt(attribution, verification, config);
    auto block = ask_with_retries(llm, prompt.text, prompt.temperature, config, [](const std::string& reply) {
                     return parse_verdict_output(reply);
                 }).first;
    Verdict verdict;
    verdict.manipulation_probability = block.probability;
    verdict.label = block.probability >= config.verdict_threshold ? Label::Fake : Label::Real;
    verdict.reasoning = std::move(block.reasoning);
    verdict.attribution = attribution;
    verdict.verification = verification;
    return verdict;
}

std::string inputs_digest(const VerificationInput& input) {
    // Unit/record separators keep field boundaries unambiguous.
    std::string canon = "v1\x1f" + input.video_id + "\x1e" + input.transcript.text + "\x1e";
    for (const auto& s : input.transcript.segments) {
        canon += text::format_double(s.start_s) + "\x1f" + text::format_double(s.end_s) + "\x1f" + s.text + "\x1d";
    }
    canon += "\x1e" + input.transcript.language_tag.value_or("") + "\x1e";
    for (const auto& p : input.people.people) {
        canon += p.person_id + "\x1f" + p.display_name + "\x1f" + std::to_string(p.frame_hits) + "\x1f" +
                 text::format_double(p.peak_similarity) + "\x1d";
    }
    canon += "\x1e" + std::to_string(input.people.unknown_face_count) + "\x1f" +
             std::to_string(input.people.detection_count);
    return text::hash_hex(canon);
}

Verdict verify_video(const VerificationInput& input, const AgentAdapters& adapters, const AgentConfig& config) {
    if (!(config.verdict_threshold > 0.0 && config.verdict_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "verdict threshold must lie in (0, 1]");
    }
    const std::string digest = inputs_digest(input);

    if (text::trim(input.transcript.text).empty() && input.people.people.empty()) {
        Verdict v;
        v.label = Label::Real;
        v.manipulation_probability = clamp_probability(config.verdict_threshold - config.short_circuit_epsilon);
        if (v.manipulation_probability >= config.verdict_threshold) v.label = Label::Fake;
        v.reasoning = "Insufficient signal: no speech was transcribed and no known person was recognized, so "
                      "there is no attributed statement to verify and no evidence of falsification.";
        v.inputs_digest = digest;
        v.short_circuited = true;
        return v;
    }
    if (!adapters.llm) throw Error(ErrorCode::LlmUnavailable, "no language model configured");

    const AgentPrompt attribution_prompt = build_attribution_prompt(input, config);
    const AgentPrompt verification_prompt = build_verification_prompt(input, config);

    auto run = [&](const AgentPrompt& prompt) {
        try {
            return run_agent(prompt, *adapters.llm, adapters.search.get(), config);
        } catch (const Error& e) {
            throw e.with_context(std::string(to_string(prompt.role)) + " agent");
        }
    };

    AgentAnalysis attribution;
    AgentAnalysis verification;
    switch (config.schedule) {
        case AgentSchedule::Concurrent: {
            auto pending = std::async(std::launch::async, run, std::cref(verification_prompt));
            try {
                attribution = run(attribution_prompt);
            } catch (...) {
                pending.wait();
                throw;
            }
            verification = pending.get();
            break;
        }
        case AgentSchedule::AttributionFirst:
            attribution = run(attribution_prompt);
            verification = run(verification_prompt);
            break;
        case AgentSchedule::VerificationFirst:
            verification = run(verification_prompt);
            attribution = run(attribution_prompt);
            break;
    }

    Verdict verdict;
    try {
        verdict = consolidate(attribution, verification, *adapters.llm, config);
    } catch (const Error& e) {
        throw e.with_context("consolidation");
    }
    verdict.inputs_digest = digest;
    return verdict;
}

}  // namespace veriflow
