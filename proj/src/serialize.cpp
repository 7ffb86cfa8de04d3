#include "veriflow/serialize.hpp"

namespace veriflow {

using nlohmann::json;

void to_json(json& j, const Transcript& t) {
    j = json{{"text", t.text}};
    if (!t.segments.empty()) {
        json segs = json::array();
        for (const auto& s : t.segments) segs.push_back({{"start", s.start_s}, {"end", s.end_s}, {"text", s.text}});
        j["segments"] = std::move(segs);
    }
    if (t.language_tag) j["language"] = *t.language_tag;
}

void to_json(json& j, const IdentifiedPeople& p) {
    json people = json::array();
    for (const auto& s : p.people) {
        people.push_back({{"person_id", s.person_id},
                          {"display_name", s.display_name},
                          {"frame_hits", s.frame_hits},
                          {"peak_similarity", s.peak_similarity}});
    }
    j = json{{"people", std::move(people)},
             {"unknown_face_count", p.unknown_face_count},
             {"detection_count", p.detection_count}};
}

void to_json(json& j, const EvidenceItem& e) {
    j = json{{"query", e.query}, {"title", e.title}, {"snippet", e.snippet}, {"url", e.url}};
}

void to_json(json& j, const AgentAnalysis& a) {
    j = json{{"role", to_string(a.role)},
             {"judgment", to_string(a.judgment)},
             {"confidence", a.confidence},
             {"reasoning", a.reasoning},
             {"evidence", a.evidence},
             {"retries", a.retries},
             {"search_degraded", a.search_degraded}};
    if (a.role == AgentRole::Verification) j["ethical_flag"] = a.ethical_flag;
}

void to_json(json& j, const Verdict& v) {
    j = json{{"label", to_string(v.label)},
             {"manipulation_probability", v.manipulation_probability},
             {"reasoning", v.reasoning},
             {"inputs_digest", v.inputs_digest},
             {"short_circuited", v.short_circuited}};
    if (v.attribution) j["attribution"] = *v.attribution;
    if (v.verification) j["verification"] = *v.verification;
}

void to_json(json& j, const ConfusionMatrix& c) {
    j = json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

void to_json(json& j, const PerVideoRow& r) {
    j = json{{"video_id", r.video_id}, {"label", to_string(r.label)}};
    j["predicted"] = r.predicted ? json(to_string(*r.predicted)) : json(nullptr);
    j["probability"] = r.probability ? json(*r.probability) : json(nullptr);
    j["error"] = r.error ? json(*r.error) : json(nullptr);
}

void to_json(json& j, const MetricsReport& r) {
    j = json{{"config", r.config_label},
             {"accuracy", r.metrics.accuracy},
             {"precision", r.metrics.precision},
             {"recall", r.metrics.recall},
             {"f1", r.metrics.f1},
             {"fpr", r.metrics.fpr},
             {"fnr", r.metrics.fnr},
             {"undefined", r.metrics.undefined},
             {"confusion", r.confusion},
             {"error_count", r.error_count},
             {"per_video", r.per_video}};
}

}  // namespace veriflow
