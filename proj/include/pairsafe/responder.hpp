#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pairsafe/dialogue.hpp"
#include "pairsafe/gateway.hpp"

namespace pairsafe::responder {

struct ResponderContext {
  std::string target_behavior;
  std::vector<AgentTurn> history;
  // Set only when asking for a revision of the last responder turn in `history`.
  std::optional<std::string> pending_feedback;
};

struct ResponderConfig {
  std::string model_id;
  double temperature = 0.7;
  int max_output_tokens = 512;
  int format_retries = 3;
};

llm::ChatRequest build_responder_prompt(const ResponderContext& ctx, const ResponderConfig& config = {});

// Sends `request` and parses the reply as one turn of `expected`, re-sampling on
// FormatError. nullopt means the agent ended the session. Throws GenerationFailed
// once `retries` attempts produced malformed output.
std::optional<AgentTurn> generate_agent_turn(const llm::ChatRequest& request, Speaker expected,
                                             llm::Gateway& gateway, int retries);

class Responder {
 public:
  explicit Responder(ResponderConfig config = {}) : config_(std::move(config)) {}

  std::optional<AgentTurn> generate_response(const ResponderContext& ctx, llm::Gateway& gateway,
                                             const std::string& session = {}) const;

  const ResponderConfig& config() const { return config_; }

 private:
  ResponderConfig config_;
};

}  // namespace pairsafe::responder
