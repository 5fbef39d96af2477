#include "pairsafe/responder.hpp"

#include "pairsafe/errors.hpp"
#include "pairsafe/prompts.hpp"

namespace pairsafe::responder {

llm::ChatRequest build_responder_prompt(const ResponderContext& ctx, const ResponderConfig& config) {
  if (trim(ctx.target_behavior).empty()) throw PreconditionError("responder context needs a target behavior");

  std::string user = "<CONVERSATION_HISTORY>\n";
  if (!ctx.history.empty()) {
    user += render_transcript(ctx.history);
    user += '\n';
  }
  user += "</CONVERSATION_HISTORY>\n\n<TARGET_BEHAVIOR>\n";
  user += ctx.target_behavior;
  user += "\n</TARGET_BEHAVIOR>";
  if (ctx.pending_feedback) {
    user += "\n\n<MITI_FEEDBACK>\n";
    user += *ctx.pending_feedback;
    user += "\n</MITI_FEEDBACK>";
  }

  llm::ChatRequest r;
  r.messages = {{llm::Role::system, std::string(prompts::kResponderSystem)}, {llm::Role::user, std::move(user)}};
  r.model_id = config.model_id;
  r.temperature = config.temperature;
  r.max_output_tokens = config.max_output_tokens;
  r.agent = llm::agent::responder;
  return r;
}

std::optional<AgentTurn> generate_agent_turn(const llm::ChatRequest& request, Speaker expected,
                                             llm::Gateway& gateway, int retries) {
  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, retries); ++attempt) {
    const auto response = gateway.complete(request);
    try {
      return parse_agent_turn(response.content, expected);
    } catch (const FormatError& e) {
      last_error = e.what();
    }
  }
  throw GenerationFailed(std::string(to_string(expected)) + " output malformed after " + std::to_string(retries) +
                         " attempts: " + last_error);
}

std::optional<AgentTurn> Responder::generate_response(const ResponderContext& ctx, llm::Gateway& gateway,
                                                      const std::string& session) const {
  auto request = build_responder_prompt(ctx, config_);
  request.session = session;
  return generate_agent_turn(request, Speaker::responder, gateway, config_.format_retries);
}

}  // namespace pairsafe::responder
