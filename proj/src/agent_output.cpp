#include <charconv>
#include <cmath>
#include <optional>

#include "veriflow/agents.hpp"
#include "veriflow/error.hpp"
#include "veriflow/text.hpp"

namespace veriflow {

std::string_view to_string(AgentRole role) {
    switch (role) {
        case AgentRole::Attribution: return "attribution";
        case AgentRole::Verification: return "verification";
        case AgentRole::Consolidation: return "consolidation";
    }
    return "unknown";
}

std::string_view to_string(Judgment judgment) {
    switch (judgment) {
        case Judgment::Plausible: return "plausible";
        case Judgment::Implausible: return "implausible";
        case Judgment::True: return "true";
        case Judgment::False: return "false";
        case Judgment::Unverifiable: return "unverifiable";
    }
    return "unknown";
}

namespace {

struct Field {
    std::string key;
    std::string value;
};

/// Key/value lines of one fenced block. Everything after the `reasoning` key belongs to it.
struct Block {
    std::vector<Field> fields;
    std::optional<std::string> reasoning;
};

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedOutput, what); }

std::string normalize_key(std::string_view raw) {
    std::string key;
    for (char c : raw) {
        if (c == '*' || c == '-' || c == '`' || c == '#') continue;
        key.push_back(c);
    }
    return text::to_lower(text::trim(key));
}

std::optional<std::vector<std::string_view>> last_block(std::string_view text, std::string_view begin,
                                                        std::string_view end) {
    std::optional<std::vector<std::string_view>> found;
    std::optional<std::vector<std::string_view>> open;
    for (auto line : text::split_lines(text)) {
        const auto fence = text::trim(line);
        if (fence == begin) {
            open.emplace();
        } else if (fence == end && open) {
            found = std::move(open);
            open.reset();
        } else if (open) {
            open->push_back(line);
        }
    }
    return found;
}

Block read_block(std::string_view text, std::string_view begin, std::string_view end) {
    auto lines = last_block(text, begin, end);
    if (!lines) malformed("no " + std::string(begin) + "/" + std::string(end) + " block found");
    Block block;
    std::string reasoning;
    bool in_reasoning = false;
    for (auto line : *lines) {
        if (in_reasoning) {
            reasoning += '\n';
            reasoning += line;
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        auto key = normalize_key(line.substr(0, colon));
        auto value = std::string(text::trim(line.substr(colon + 1)));
        if (key == "reasoning") {
            in_reasoning = true;
            reasoning = value;
        } else {
            block.fields.push_back({std::move(key), std::move(value)});
        }
    }
    if (in_reasoning) block.reasoning = std::string(text::trim(reasoning));
    return block;
}

const std::string* single(const Block& block, std::string_view key) {
    const std::string* hit = nullptr;
    for (const auto& f : block.fields) {
        if (f.key != key) continue;
        if (hit) malformed("duplicate '" + std::string(key) + "' field");
        hit = &f.value;
    }
    return hit;
}

const std::string& required(const Block& block, std::string_view key) {
    const auto* v = single(block, key);
    if (!v) malformed("missing '" + std::string(key) + "' field");
    return *v;
}

double parse_unit_interval(const std::string& raw, std::string_view key) {
    double value = 0.0;
    const auto* first = raw.data();
    const auto* last = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        malformed("'" + std::string(key) + "' is not a number: '" + raw + "'");
    }
    if (value < 0.0 || value > 1.0) malformed("'" + std::string(key) + "' outside [0, 1]: " + raw);
    return value;
}

Judgment parse_judgment(const std::string& raw, AgentRole role) {
    const auto v = text::to_lower(raw);
    if (role == AgentRole::Attribution) {
        if (v == "plausible") return Judgment::Plausible;
        if (v == "implausible") return Judgment::Implausible;
    } else {
        if (v == "true") return Judgment::True;
        if (v == "false") return Judgment::False;
        if (v == "unverifiable") return Judgment::Unverifiable;
    }
    malformed("judgment '" + raw + "' is not valid for the " + std::string(to_string(role)) + " role");
}

bool parse_flag(const std::string& raw) {
    const auto v = text::to_lower(raw);
    if (v == "true" || v == "yes") return true;
    if (v == "false" || v == "no") return false;
    malformed("ethical_flag must be true or false, got '" + raw + "'");
}

}  // namespace

AgentAnalysis parse_agent_output(std::string_view text, AgentRole role) {
    if (role == AgentRole::Consolidation) {
        throw Error(ErrorCode::InvalidArgument, "consolidation replies are parsed with parse_verdict_output");
    }
    const Block block = read_block(text, "BEGIN_ANALYSIS", "END_ANALYSIS");
    AgentAnalysis analysis;
    analysis.role = role;
    analysis.judgment = parse_judgment(required(block, "judgment"), role);
    analysis.confidence = parse_unit_interval(required(block, "confidence"), "confidence");
    if (role == AgentRole::Verification) analysis.ethical_flag = parse_flag(required(block, "ethical_flag"));
    if (!block.reasoning) malformed("missing 'reasoning' field");
    analysis.reasoning = *block.reasoning;
    for (const auto& f : block.fields) {
        if (f.key != "evidence") continue;
        const auto bar = f.value.find('|');
        if (bar == std::string::npos) continue;
        EvidenceItem item;
        item.url = std::string(text::trim(std::string_view(f.value).substr(0, bar)));
        item.snippet = std::string(text::trim(std::string_view(f.value).substr(bar + 1)));
        if (item.snippet.empty()) continue;
        analysis.evidence.push_back(std::move(item));
    }
    return analysis;
}

std::string serialize_analysis(const AgentAnalysis& analysis) {
    std::string out = "BEGIN_ANALYSIS\n";
    out += "judgment: " + std::string(to_string(analysis.judgment)) + '\n';
    out += "confidence: " + text::format_double(analysis.confidence) + '\n';
    if (analysis.role == AgentRole::Verification) {
        out += std::string("ethical_flag: ") + (analysis.ethical_flag ? "true" : "false") + '\n';
    }
    for (const auto& e : analysis.evidence) out += "evidence: " + e.url + " | " + e.snippet + '\n';
    out += "reasoning: " + analysis.reasoning + '\n';
    out += "END_ANALYSIS\n";
    return out;
}

VerdictBlock parse_verdict_output(std::string_view text) {
    const Block block = read_block(text, "BEGIN_VERDICT", "END_VERDICT");
    VerdictBlock verdict;
    const auto& label = required(block, "label");
    try {
        verdict.label = parse_label(label);
    } catch (const Error&) {
        malformed("label must be real or fake, got '" + label + "'");
    }
    verdict.probability = parse_unit_interval(required(block, "probability"), "probability");
    if (!block.reasoning) malformed("missing 'reasoning' field");
    verdict.reasoning = *block.reasoning;
    return verdict;
}

std::string serialize_verdict(const VerdictBlock& block) {
    std::string out = "BEGIN_VERDICT\n";
    out += "label: " + std::string(to_string(block.label)) + '\n';
    out += "probability: " + text::format_double(block.probability) + '\n';
    out += "reasoning: " + block.reasoning + '\n';
    out += "END_VERDICT\n";
    return out;
}

}  // namespace veriflow
