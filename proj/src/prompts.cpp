#include <algorithm>
#include <sstream>

#include "veriflow/agents.hpp"
#include "veriflow/error.hpp"
#include "veriflow/text.hpp"

namespace veriflow {

namespace {

constexpr std::size_t kMinClaimWords = 3;
constexpr std::size_t kMaxClaimWords = 12;

const char* const kAttributionFormat =
    "Finish your answer with exactly one block in this format:\n"
    "BEGIN_ANALYSIS\n"
    "judgment: plausible | implausible\n"
    "confidence: <number between 0 and 1>\n"
    "evidence: <url> | <short snippet you relied on>   (zero or more lines)\n"
    "reasoning: <your reasoning, may span several lines>\n"
    "END_ANALYSIS\n";

const char* const kVerificationFormat =
    "Finish your answer with exactly one block in this format:\n"
    "BEGIN_ANALYSIS\n"
    "judgment: true | false | unverifiable\n"
    "confidence: <number between 0 and 1>\n"
    "ethical_flag: true | false\n"
    "evidence: <url> | <short snippet you relied on>   (zero or more lines)\n"
    "reasoning: <your reasoning, may span several lines>\n"
    "END_ANALYSIS\n";

const char* const kVerdictFormat =
    "Finish your answer with exactly one block in this format:\n"
    "BEGIN_VERDICT\n"
    "label: real | fake\n"
    "probability: <probability between 0 and 1 that the video was manipulated>\n"
    "reasoning: <consolidated reasoning, may span several lines>\n"
    "END_VERDICT\n";

void check_temperature(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidArgument, "temperature must lie in [0, 1]");
}

void append_transcript(std::ostringstream& os, const Transcript& transcript) {
    os << "Transcript of the spoken content:\n\"\"\"\n" << transcript.text << "\n\"\"\"\n\n";
}

void append_dedup(std::vector<std::string>& out, std::string q, std::size_t cap) {
    if (out.size() >= cap || q.empty()) return;
    if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(std::move(q));
}

void render_analysis(std::ostringstream& os, const AgentAnalysis& a) {
    os << "judgment: " << to_string(a.judgment) << '\n';
    os << "confidence: " << text::format_fixed(a.confidence, 2) << '\n';
    if (a.role == AgentRole::Verification) os << "ethical_flag: " << (a.ethical_flag ? "true" : "false") << '\n';
    if (a.search_degraded) os << "note: web search was unavailable for this analysis\n";
    os << "reasoning:\n" << a.reasoning << '\n';
    if (!a.evidence.empty()) {
        os << "cited evidence:\n";
        for (const auto& e : a.evidence) os << "- " << e.url << " | " << e.snippet << '\n';
    }
}

}  // namespace

std::vector<std::string> extract_claim_phrases(std::string_view transcript, std::size_t max_phrases) {
    std::vector<std::string> phrases;
    for (const auto& sentence : text::split_sentences(transcript)) {
        if (phrases.size() >= max_phrases) break;
        auto words = text::split_words(sentence);
        if (words.size() < kMinClaimWords) continue;
        words.resize(std::min(words.size(), kMaxClaimWords));
        std::string phrase;
        for (const auto& w : words) phrase += (phrase.empty() ? "" : " ") + w;
        while (!phrase.empty() && std::string_view(".!?,;:").find(phrase.back()) != std::string_view::npos) {
            phrase.pop_back();
        }
        append_dedup(phrases, std::move(phrase), max_phrases);
    }
    return phrases;
}

AgentPrompt build_attribution_prompt(const VerificationInput& input, const AgentConfig& config) {
    check_temperature(config.temperature);
    const auto& people = input.people.people;
    std::ostringstream os;
    os << "You are an attribution analyst. A short social-media video shows people speaking; decide whether "
          "the words could genuinely have come from the people recognized in it.\n\n";
    if (people.empty()) {
        os << "No known public figure was recognized in the video. Unrecognized faces on screen: "
           << input.people.unknown_face_count << ".\n\n";
    } else {
        os << "People recognized in the video:\n";
        for (const auto& p : people) os << "- " << p.display_name << '\n';
        os << "Unrecognized faces on screen: " << input.people.unknown_face_count << ".\n\n";
    }
    append_transcript(os, input.transcript);
    if (people.empty()) {
        os << "Task: the speakers are unknown. Judge whether these statements are plausible as authentic speech, "
              "or whether they read as words put into someone's mouth, for example an endorsement, confession or "
              "announcement that no real speaker would plausibly make.\n";
    } else {
        os << "Task: for each person listed, judge whether they could plausibly have made these statements. "
              "Weigh their known positions and public record, their usual speaking style and vocabulary, and "
              "whether the content fits the contexts they normally speak in. Statements that contradict a "
              "person's documented views, or that promote products, schemes or claims they have no known "
              "association with, indicate fabricated attribution.\n";
    }
    os << "Base the judgment only on the transcript, the names above and any web evidence provided.\n\n";
    os << kAttributionFormat;

    AgentPrompt prompt{AgentRole::Attribution, os.str(), config.temperature, {}};
    const auto claims = extract_claim_phrases(input.transcript.text, config.max_queries);
    if (people.empty()) {
        for (const auto& c : claims) append_dedup(prompt.search_queries, c, config.max_queries);
    } else {
        for (std::size_t i = 0; i < people.size() && i < config.max_queries; ++i) {
            std::string q = people[i].display_name;
            q += claims.empty() ? " statement" : " " + claims[i % claims.size()];
            append_dedup(prompt.search_queries, std::move(q), config.max_queries);
        }
    }
    return prompt;
}

AgentPrompt build_verification_prompt(const VerificationInput& input, const AgentConfig& config) {
    check_temperature(config.temperature);
    std::ostringstream os;
    os << "You are a fact-checker reviewing what is said in a short social-media video.\n\n";
    append_transcript(os, input.transcript);
    if (text::trim(input.transcript.text).empty()) {
        os << "The video contains no transcribed speech, so there are no verifiable claims. Answer with judgment "
              "\"unverifiable\", ethical_flag false, and say in the reasoning that nothing was said.\n\n";
    } else {
        os << "Task:\n"
              "1. List each factual claim made in the transcript.\n"
              "2. For each claim decide whether it is true, false or unverifiable, citing the retrieved web "
              "evidence where it supports or contradicts the claim.\n"
              "3. Assess the ethical implications: does the content spread misinformation, promote scams or "
              "harmful advice, or incite harm?\n"
              "Overall judgment: \"false\" if any central claim is false or misleading, \"true\" if the central "
              "claims are supported, otherwise \"unverifiable\". Set ethical_flag to true if the content is "
              "harmful or unethical.\n\n";
    }
    os << kVerificationFormat;

    AgentPrompt prompt{AgentRole::Verification, os.str(), config.temperature, {}};
    prompt.search_queries = extract_claim_phrases(input.transcript.text, config.max_queries);
    return prompt;
}

AgentPrompt build_consolidation_prompt(const AgentAnalysis& attribution, const AgentAnalysis& verification,
                                       const AgentConfig& config) {
    check_temperature(config.temperature);
    std::ostringstream os;
    os << "You are the final reviewer deciding whether a short social-media video is authentic or a deepfake "
          "made to spread misinformation. Two analysts examined only its transcript and the people recognized "
          "in it.\n\n";
    os << "Attribution analysis (could the recognized people plausibly have said this?):\n";
    render_analysis(os, attribution);
    os << "\nFact and ethics analysis (are the statements true and ethically sound?):\n";
    render_analysis(os, verification);
    os << "\nWeigh both analyses, their confidence and their reasoning. Implausible attribution or false, harmful "
          "claims point to manipulation; plausible attribution with supported claims points to authentic "
          "content. Estimate the probability that the video was manipulated.\n\n";
    os << kVerdictFormat;
    return AgentPrompt{AgentRole::Consolidation, os.str(), config.temperature, {}};
}

std::string retry_prompt(std::string_view prompt_text, std::size_t attempt) {
    std::string out(prompt_text);
    out += "\n\nReminder (attempt " + std::to_string(attempt + 1) +
           "): the previous reply did not contain a valid structured block. Reply again and include exactly "
           "one block in the required format.\n";
    return out;
}

std::string render_agent_request(const AgentPrompt& prompt, const std::vector<EvidenceItem>& evidence,
                                 bool search_failed) {
    if (prompt.search_queries.empty()) return prompt.text;
    std::ostringstream os;
    os << prompt.text << "\nWeb search evidence:\n";
    if (evidence.empty()) os << "(no results)\n";
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        const auto& e = evidence[i];
        os << '[' << (i + 1) << "] query: " << e.query << '\n'
           << "    title: " << e.title << '\n'
           << "    url: " << e.url << '\n'
           << "    snippet: " << e.snippet << '\n';
    }
    if (search_failed) os << "Web search was unavailable for some queries; say so if it limits your judgment.\n";
    os << "Use the evidence where relevant and answer with the required block.\n";
    return os.str();
}

}  // namespace veriflow
