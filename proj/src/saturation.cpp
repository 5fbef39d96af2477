#include "pairsafe/saturation.hpp"

#include <iomanip>
#include <sstream>

#include "pairsafe/errors.hpp"

namespace pairsafe::stats {

namespace {

struct Live {
  std::string id;
  std::vector<AgentTurn> seed;
  std::vector<AgentTurn> generated;
  std::string target;
  bool passed = false;
  bool retired = false;  // revision failed; no further attempts
};

// One pass over the responder turns: each is audited once and revised at most once,
// with later turns judged against the already revised history.
void revise_once(Live& c, const supervisor::Supervisor& sup, llm::Gateway& gateway) {
  std::vector<AgentTurn> history = c.seed;
  for (auto& turn : c.generated) {
    if (turn.speaker == Speaker::responder) {
      supervisor::TurnTrace trace;
      turn.text = sup.supervise_turn(history, c.target, turn.text, gateway, c.id, trace);
    }
    history.push_back(turn);
  }
}

}  // namespace

PassRateCurve pass_rate_curve(std::span<const orchestrator::ConversationRecord> records,
                              const supervisor::CalibrationProfile& profile, const SaturationAgents& agents,
                              llm::Gateway& gateway, int policy_max) {
  if (policy_max < 0 || policy_max > supervisor::RevisionPolicy::kMaxRounds) {
    throw PreconditionError("policy_max must be in 0.." + std::to_string(supervisor::RevisionPolicy::kMaxRounds));
  }
  PassRateCurve curve;
  std::vector<Live> live;
  for (const auto& r : records) {
    if (r.termination == orchestrator::Termination::failed) {
      curve.excluded.emplace_back(r.source_id, r.error.value_or("record failed"));
      continue;
    }
    Live c{r.source_id, r.seed_turns, r.generated_turns, r.theme_profile.target_behavior};
    try {
      const auto score = r.score ? r.score->score
                                 : orchestrator::score_turns(r.seed_turns, r.generated_turns, agents.score_judge,
                                                             gateway, r.source_id)
                                       .score;
      c.passed = supervisor::conversation_pass(score, profile);
    } catch (const BudgetExceeded&) {
      throw;
    } catch (const Error& e) {
      curve.excluded.emplace_back(r.source_id, e.what());
      continue;
    }
    live.push_back(std::move(c));
  }
  curve.n_conversations = live.size();

  auto tally = [&](int round) {
    RoundPassRate p{round};
    for (const auto& c : live) p.passed += c.passed;
    p.pass_fraction = live.empty() ? 0.0 : static_cast<double>(p.passed) / static_cast<double>(live.size());
    curve.rounds.push_back(p);
  };
  tally(0);

  const supervisor::Supervisor sup(agents.gate_judge, agents.responder, &profile, supervisor::RevisionPolicy{1});
  for (int round = 1; round <= policy_max; ++round) {
    for (auto& c : live) {
      if (c.passed || c.retired) continue;
      try {
        revise_once(c, sup, gateway);
        const auto rescored = orchestrator::score_turns(c.seed, c.generated, agents.score_judge, gateway, c.id);
        c.passed = supervisor::conversation_pass(rescored.score, profile);
      } catch (const BudgetExceeded&) {
        throw;
      } catch (const Error& e) {
        c.retired = true;
        curve.retry_errors.emplace_back(c.id, "round " + std::to_string(round) + ": " + e.what());
      }
    }
    tally(round);
  }
  return curve;
}

std::string PassRateCurve::to_text() const {
  std::ostringstream os;
  os << "round  passed  pass_rate\n";
  for (const auto& r : rounds) {
    os << std::setw(5) << r.round << std::setw(8) << r.passed << std::setw(10) << std::fixed << std::setprecision(2)
       << 100.0 * r.pass_fraction << "%\n";
  }
  os << "conversations: " << n_conversations << '\n';
  if (!excluded.empty()) os << "excluded: " << excluded.size() << '\n';
  for (const auto& [id, why] : excluded) os << "  " << id << ": " << why << '\n';
  for (const auto& [id, why] : retry_errors) os << "  retry error " << id << ": " << why << '\n';
  return os.str();
}

std::string PassRateCurve::to_csv() const {
  std::ostringstream os;
  os << "round,passed,n,pass_fraction\n";
  os << std::setprecision(17);
  for (const auto& r : rounds) os << r.round << ',' << r.passed << ',' << n_conversations << ',' << r.pass_fraction << '\n';
  return os.str();
}

}  // namespace pairsafe::stats
