#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pairsafe/dialogue.hpp"
#include "pairsafe/gateway.hpp"
#include "pairsafe/rubric.hpp"

namespace pairsafe::judge {

inline constexpr std::size_t kWindowTurns = 4;

// The turns the judge sees: up to three preceding turns plus the candidate, which is
// always last and always spoken by the responder.
struct AuditWindow {
  std::vector<AgentTurn> turns;
};

AuditWindow build_window(std::span<const AgentTurn> history, std::string_view candidate);

struct JudgeConfig {
  std::string model_id;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  int parse_retries = 3;
  // Gateway routing key: "judge" while gating, "scorer" for post-hoc scoring.
  std::string agent = llm::agent::judge;
};

llm::ChatRequest build_judge_prompt(const AuditWindow& window, const JudgeConfig& config = {});

// Validates the audit schema. Throws NotParseable when no JSON object is present and
// SchemaError on a missing key, a wrong type or an out-of-range value.
rubric::TurnAudit parse_judge_output(std::string_view raw, int window_size = 1);

// Inverse of parse_judge_output (window_size is not part of the wire schema).
nlohmann::json serialize_audit(const rubric::TurnAudit& audit);

class Judge {
 public:
  explicit Judge(JudgeConfig config = {}) : config_(std::move(config)) {}

  // build_window -> build_judge_prompt -> complete -> parse, retrying unparseable
  // output with a fresh completion. Throws AuditFailed after parse_retries attempts.
  rubric::TurnAudit audit_turn(std::span<const AgentTurn> history, std::string_view candidate,
                               llm::Gateway& gateway, const std::string& session = {}) const;

  const JudgeConfig& config() const { return config_; }

 private:
  JudgeConfig config_;
};

}  // namespace pairsafe::judge
