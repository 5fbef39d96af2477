#pragma once

#include <span>
#include <string>
#include <vector>

#include "pairsafe/gateway.hpp"
#include "pairsafe/judge.hpp"
#include "pairsafe/orchestrator.hpp"
#include "pairsafe/responder.hpp"
#include "pairsafe/supervisor.hpp"

namespace pairsafe::stats {

struct RoundPassRate {
  int round = 0;
  std::size_t passed = 0;
  double pass_fraction = 0;
};

struct PassRateCurve {
  std::vector<RoundPassRate> rounds;  // policy_max + 1 entries, round 0 first
  std::size_t n_conversations = 0;
  // Records left out because they failed or could not be scored, with the reason.
  std::vector<std::pair<std::string, std::string>> excluded;
  // Conversations whose revision failed in a later round; they stay counted as failing.
  std::vector<std::pair<std::string, std::string>> retry_errors;

  std::string to_text() const;
  std::string to_csv() const;
};

struct SaturationAgents {
  judge::Judge gate_judge;
  judge::Judge score_judge;
  responder::Responder responder;
};

// Round 0 is the pass fraction of the records as given. Each later round revises every
// responder turn of the conversations still failing once (audit, then a feedback-driven
// revision when the verdict is Revise), keeps the seeker turns, re-scores, and reports
// the cumulative pass fraction. Passing conversations are never revisited.
PassRateCurve pass_rate_curve(std::span<const orchestrator::ConversationRecord> records,
                              const supervisor::CalibrationProfile& profile, const SaturationAgents& agents,
                              llm::Gateway& gateway, int policy_max = supervisor::RevisionPolicy::kMaxRounds);

}  // namespace pairsafe::stats
