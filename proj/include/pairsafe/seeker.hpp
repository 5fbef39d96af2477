#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pairsafe/dialogue.hpp"
#include "pairsafe/gateway.hpp"

namespace pairsafe::seeker {

// Themes extracted from a source transcript. Lists may be empty; target_behavior may not.
struct ThemeProfile {
  std::vector<std::string> key_beliefs;
  std::vector<std::string> core_emotions;
  std::vector<std::string> recurrent_narratives;
  std::vector<std::string> symptom_patterns;
  std::string target_behavior;

  nlohmann::json to_json() const;
  // The four theme lists only; the target behavior goes to the responder, not the seeker.
  nlohmann::json themes_json() const;
  static ThemeProfile from_json(const nlohmann::json& j);

  bool operator==(const ThemeProfile&) const = default;
};

// Throws NotParseable or SchemaError (missing key, non-list, empty target_behavior).
ThemeProfile parse_theme_profile(std::string_view raw);

struct SeekerConfig {
  std::string model_id;
  double temperature = 0.7;
  int max_output_tokens = 512;
  double extraction_temperature = 0.0;
  int extraction_max_output_tokens = 2048;
  int retries = 3;
};

llm::ChatRequest build_extraction_prompt(std::span<const AgentTurn> transcript, const SeekerConfig& config = {});
llm::ChatRequest build_seeker_prompt(const ThemeProfile& profile, std::span<const AgentTurn> history,
                                     const SeekerConfig& config = {});

class SeekerSim {
 public:
  explicit SeekerSim(SeekerConfig config = {}) : config_(std::move(config)) {}

  // Throws PreconditionError on an empty transcript, ExtractionFailed after `retries`
  // unusable outputs.
  ThemeProfile extract_themes(std::span<const AgentTurn> transcript, llm::Gateway& gateway,
                              const std::string& session = {}) const;

  // One "C: " turn, or nullopt when the simulated client ends the session.
  std::optional<AgentTurn> generate_seeker_turn(const ThemeProfile& profile, std::span<const AgentTurn> history,
                                                llm::Gateway& gateway, const std::string& session = {}) const;

  const SeekerConfig& config() const { return config_; }

 private:
  SeekerConfig config_;
};

}  // namespace pairsafe::seeker
