#include "pairsafe/seeker.hpp"

#include "pairsafe/errors.hpp"
#include "pairsafe/prompts.hpp"
#include "pairsafe/responder.hpp"
#include "pairsafe/structured_output.hpp"

namespace pairsafe::seeker {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kThemeKeys = {"key_beliefs", "core_emotions", "recurrent_narratives",
                                                        "symptom_patterns"};

std::vector<std::string>& list_for(ThemeProfile& p, std::string_view key) {
  if (key == "key_beliefs") return p.key_beliefs;
  if (key == "core_emotions") return p.core_emotions;
  if (key == "recurrent_narratives") return p.recurrent_narratives;
  return p.symptom_patterns;
}

}  // namespace

json ThemeProfile::themes_json() const {
  return {{"key_beliefs", key_beliefs},
          {"core_emotions", core_emotions},
          {"recurrent_narratives", recurrent_narratives},
          {"symptom_patterns", symptom_patterns}};
}

json ThemeProfile::to_json() const {
  json j = themes_json();
  j["target_behavior"] = target_behavior;
  return j;
}

ThemeProfile ThemeProfile::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("theme profile must be an object");
  ThemeProfile p;
  for (auto key : kThemeKeys) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError("missing key '" + std::string(key) + "'");
    if (!it->is_array()) throw SchemaError("wrong type for '" + std::string(key) + "': expected list");
    auto& out = list_for(p, key);
    for (const auto& item : *it) {
      // Extractors occasionally emit small objects instead of strings; keep their text.
      out.push_back(item.is_string() ? item.get<std::string>() : item.dump());
    }
  }
  auto tb = j.find("target_behavior");
  if (tb == j.end()) throw SchemaError("missing key 'target_behavior'");
  if (!tb->is_string()) throw SchemaError("wrong type for 'target_behavior': expected string");
  p.target_behavior = std::string(trim(tb->get<std::string>()));
  if (p.target_behavior.empty()) throw SchemaError("target_behavior must be a non-empty string");
  return p;
}

ThemeProfile parse_theme_profile(std::string_view raw) { return ThemeProfile::from_json(extract_json_object(raw)); }

llm::ChatRequest build_extraction_prompt(std::span<const AgentTurn> transcript, const SeekerConfig& config) {
  llm::ChatRequest r;
  r.messages = {{llm::Role::system, std::string(prompts::kThemeExtractionSystem)},
                {llm::Role::user, "<TRANSCRIPT>\n" + render_transcript(transcript) + "\n</TRANSCRIPT>"}};
  r.model_id = config.model_id;
  r.temperature = config.extraction_temperature;
  r.max_output_tokens = config.extraction_max_output_tokens;
  r.agent = llm::agent::extractor;
  return r;
}

llm::ChatRequest build_seeker_prompt(const ThemeProfile& profile, std::span<const AgentTurn> history,
                                     const SeekerConfig& config) {
  std::string user = "<THEMES>\n" + profile.themes_json().dump(2) + "\n</THEMES>\n\n<CONVERSATION_HISTORY>\n";
  if (!history.empty()) {
    user += render_transcript(history);
    user += '\n';
  }
  user += "</CONVERSATION_HISTORY>";

  llm::ChatRequest r;
  r.messages = {{llm::Role::system, std::string(prompts::kSeekerSystem)}, {llm::Role::user, std::move(user)}};
  r.model_id = config.model_id;
  r.temperature = config.temperature;
  r.max_output_tokens = config.max_output_tokens;
  r.agent = llm::agent::seeker;
  return r;
}

ThemeProfile SeekerSim::extract_themes(std::span<const AgentTurn> transcript, llm::Gateway& gateway,
                                       const std::string& session) const {
  if (transcript.empty()) throw PreconditionError("cannot extract themes from an empty transcript");
  auto request = build_extraction_prompt(transcript, config_);
  request.session = session;

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, config_.retries); ++attempt) {
    const auto response = gateway.complete(request);
    try {
      return parse_theme_profile(response.content);
    } catch (const SchemaError& e) {
      last_error = e.what();
    } catch (const NotParseable& e) {
      last_error = e.what();
    }
  }
  throw ExtractionFailed("theme extraction failed after " + std::to_string(config_.retries) +
                         " attempts: " + last_error);
}

std::optional<AgentTurn> SeekerSim::generate_seeker_turn(const ThemeProfile& profile,
                                                         std::span<const AgentTurn> history, llm::Gateway& gateway,
                                                         const std::string& session) const {
  auto request = build_seeker_prompt(profile, history, config_);
  request.session = session;
  return responder::generate_agent_turn(request, Speaker::seeker, gateway, config_.retries);
}

}  // namespace pairsafe::seeker
