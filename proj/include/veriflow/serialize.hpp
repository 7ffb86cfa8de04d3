#pragma once

#include "json.hpp"
#include "veriflow/agents.hpp"
#include "veriflow/eval.hpp"
#include "veriflow/media.hpp"

// JSON views of the pipeline's outputs, as printed by the CLI.
namespace veriflow {

void to_json(nlohmann::json& j, const Transcript& t);
void to_json(nlohmann::json& j, const IdentifiedPeople& p);
void to_json(nlohmann::json& j, const EvidenceItem& e);
void to_json(nlohmann::json& j, const AgentAnalysis& a);
void to_json(nlohmann::json& j, const Verdict& v);
void to_json(nlohmann::json& j, const ConfusionMatrix& c);
void to_json(nlohmann::json& j, const PerVideoRow& r);
void to_json(nlohmann::json& j, const MetricsReport& r);

}  // namespace veriflow
