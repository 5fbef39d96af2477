#include "pairsafe/dialogue.hpp"

#include "pairsafe/errors.hpp"

namespace pairsafe {

namespace {
constexpr std::string_view kWhitespace = " \t\r\n\v\f";
}

std::string_view to_string(Speaker s) { return s == Speaker::seeker ? "seeker" : "responder"; }

Speaker speaker_from_string(std::string_view s) {
  if (s == "seeker") return Speaker::seeker;
  if (s == "responder") return Speaker::responder;
  throw SchemaError("unknown speaker '" + std::string(s) + "'");
}

std::string_view line_prefix(Speaker s) { return s == Speaker::seeker ? "C: " : "T: "; }

std::string render_transcript(std::span<const AgentTurn> turns) {
  std::string out;
  for (const auto& t : turns) {
    if (!out.empty()) out += '\n';
    out += line_prefix(t.speaker);
    out += t.text;
  }
  return out;
}

std::string_view rtrim(std::string_view s) {
  auto end = s.find_last_not_of(kWhitespace);
  return end == std::string_view::npos ? std::string_view{} : s.substr(0, end + 1);
}

std::string_view trim(std::string_view s) {
  auto begin = s.find_first_not_of(kWhitespace);
  if (begin == std::string_view::npos) return {};
  return rtrim(s.substr(begin));
}

std::optional<AgentTurn> parse_agent_turn(std::string_view text, Speaker expected) {
  auto body = trim(text);
  if (body.empty()) return std::nullopt;
  if (body.find('\n') != std::string_view::npos) {
    throw FormatError("expected exactly one line, got several");
  }
  // Accept "T:" followed by any horizontal whitespace; the canonical form is "T: ".
  const char tag = expected == Speaker::seeker ? 'C' : 'T';
  if (body.size() < 2 || body[0] != tag || body[1] != ':') {
    throw FormatError("expected a line starting with '" + std::string(line_prefix(expected)) + "'");
  }
  auto content = trim(body.substr(2));
  if (content.empty()) throw FormatError("turn has a prefix but no content");
  return AgentTurn{expected, std::string(content)};
}

}  // namespace pairsafe
