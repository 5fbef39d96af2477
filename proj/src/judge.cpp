#include "pairsafe/judge.hpp"

#include <cmath>

#include "pairsafe/errors.hpp"
#include "pairsafe/prompts.hpp"
#include "pairsafe/structured_output.hpp"

namespace pairsafe::judge {

using nlohmann::json;

AuditWindow build_window(std::span<const AgentTurn> history, std::string_view candidate) {
  if (trim(candidate).empty()) throw PreconditionError("candidate response is empty");
  const std::size_t context = std::min(history.size(), kWindowTurns - 1);
  AuditWindow w;
  w.turns.assign(history.end() - static_cast<std::ptrdiff_t>(context), history.end());
  w.turns.push_back(AgentTurn{Speaker::responder, std::string(candidate)});
  return w;
}

llm::ChatRequest build_judge_prompt(const AuditWindow& window, const JudgeConfig& config) {
  if (window.turns.empty() || window.turns.back().speaker != Speaker::responder) {
    throw PreconditionError("audit window must end with the candidate responder turn");
  }
  std::string user;
  if (window.turns.size() > 1) {
    user += "Client statement (the input prompt), with the preceding turns of the session:\n";
    user += render_transcript(std::span(window.turns).first(window.turns.size() - 1));
    user += "\n\n";
  }
  user += "Counselor/therapist response (the output being evaluated):\n";
  user += line_prefix(Speaker::responder);
  user += window.turns.back().text;

  llm::ChatRequest r;
  r.messages = {{llm::Role::system, std::string(prompts::kJudgeSystem)}, {llm::Role::user, std::move(user)}};
  r.model_id = config.model_id;
  r.temperature = config.temperature;
  r.max_output_tokens = config.max_output_tokens;
  r.agent = config.agent;
  return r;
}

namespace {

// A single turn cannot plausibly hold more behaviors than this.
constexpr double kMaxCount = 1e6;

const json& require_object(const json& parent, std::string_view key) {
  auto it = parent.find(key);
  if (it == parent.end()) throw SchemaError("missing key '" + std::string(key) + "'");
  if (!it->is_object()) throw SchemaError("wrong type for '" + std::string(key) + "': expected object");
  return *it;
}

// Integral JSON number (4 and 4.0 both accepted).
double require_integer(const json& parent, std::string_view block, std::string_view key) {
  const std::string where = std::string(block) + "." + std::string(key);
  auto it = parent.find(key);
  if (it == parent.end()) throw SchemaError("missing key '" + where + "'");
  if (!it->is_number()) throw SchemaError("wrong type for '" + where + "': expected integer");
  const double v = it->get<double>();
  if (!std::isfinite(v) || v != std::floor(v)) throw SchemaError("wrong type for '" + where + "': expected integer");
  return v;
}

}  // namespace

rubric::TurnAudit parse_judge_output(std::string_view raw, int window_size) {
  const json doc = extract_json_object(raw);
  const json& ratings = require_object(doc, "global_ratings");
  const json& counts = require_object(doc, "behavior_counts");
  const json& rationales = require_object(doc, "rationales");

  std::array<int, 4> r{};
  for (std::size_t i = 0; i < rubric::kRatingKeys.size(); ++i) {
    const double v = require_integer(ratings, "global_ratings", rubric::kRatingKeys[i]);
    if (v < 1 || v > 5) {
      throw SchemaError("out-of-range value for 'global_ratings." + std::string(rubric::kRatingKeys[i]) +
                        "': " + std::to_string(v));
    }
    r[i] = static_cast<int>(v);
  }

  std::array<double, 10> c{};
  for (std::size_t i = 0; i < rubric::kCountKeys.size(); ++i) {
    const double v = require_integer(counts, "behavior_counts", rubric::kCountKeys[i]);
    if (v < 0 || v > kMaxCount) {
      throw SchemaError("out-of-range value for 'behavior_counts." + std::string(rubric::kCountKeys[i]) +
                        "': " + std::to_string(v));
    }
    c[i] = v;
  }

  rubric::TurnAudit audit;
  audit.ratings = {r[0], r[1], r[2], r[3]};
  audit.counts = rubric::BehaviorCounts::from_values(c, false);
  for (auto key : rubric::kRatingKeys) {
    auto it = rationales.find(key);
    if (it == rationales.end()) throw SchemaError("missing key 'rationales." + std::string(key) + "'");
    if (!it->is_string()) throw SchemaError("wrong type for 'rationales." + std::string(key) + "': expected string");
    audit.rationales.emplace(std::string(key), it->get<std::string>());
  }
  audit.window_size = window_size;
  return audit;
}

json serialize_audit(const rubric::TurnAudit& audit) {
  json ratings = {{"cultivating_change_talk", audit.ratings.cultivating_change_talk},
                  {"softening_sustain_talk", audit.ratings.softening_sustain_talk},
                  {"partnership", audit.ratings.partnership},
                  {"empathy", audit.ratings.empathy}};
  json counts = json::object();
  const auto values = audit.counts.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    counts[std::string(rubric::kCountKeys[i])] = static_cast<std::int64_t>(values[i]);
  }
  json rationales = json::object();
  for (const auto& [k, v] : audit.rationales) rationales[k] = v;
  return {{"global_ratings", std::move(ratings)},
          {"behavior_counts", std::move(counts)},
          {"rationales", std::move(rationales)}};
}

rubric::TurnAudit Judge::audit_turn(std::span<const AgentTurn> history, std::string_view candidate,
                                    llm::Gateway& gateway, const std::string& session) const {
  const auto window = build_window(history, candidate);
  auto request = build_judge_prompt(window, config_);
  request.session = session;

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, config_.parse_retries); ++attempt) {
    const auto response = gateway.complete(request);
    try {
      return parse_judge_output(response.content, static_cast<int>(window.turns.size()));
    } catch (const SchemaError& e) {
      last_error = e.what();
    } catch (const NotParseable& e) {
      last_error = e.what();
    }
  }
  throw AuditFailed("judge output unusable after " + std::to_string(config_.parse_retries) +
                    " attempts: " + last_error);
}

}  // namespace pairsafe::judge
